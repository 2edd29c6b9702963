#pragma once

#include <set>
#include <string>
#include <utility>
#include <vector>

#include "iici/config.hpp"
#include "iici/dataset.hpp"
#include "iici/eval.hpp"
#include "iici/trainer.hpp"

namespace iici {

// The standard experiment fixture: a multi-camera pool split into an SCT
// training set (plus optional overlap injection) and a held-out query/gallery
// partition over identities the trainer never sees.
template <class S>
struct Benchmark {
    Dataset<S> train_full;
    Dataset<S> train_sct;
    Dataset<S> query;
    Dataset<S> gallery;
};

template <class S>
Benchmark<S> generate_benchmark(const RunConfig& r) {
    SynthConfig<S> sc = synth_config<S>(r);
    sc.num_ids = r.num_ids + r.num_test_ids;
    const Dataset<S> all = generate_synthetic(sc);

    Benchmark<S> b;
    b.train_full.num_ids = r.num_ids;
    b.train_full.num_cameras = r.num_cameras;
    b.query.num_ids = r.num_test_ids;
    b.query.num_cameras = r.num_cameras;
    b.gallery.num_ids = r.num_test_ids;
    b.gallery.num_cameras = r.num_cameras;

    std::set<std::pair<int, int>> first_seen;  // (test id, camera) -> query
    for (const auto& s : all.samples) {
        if (s.y < r.num_ids) {
            b.train_full.samples.push_back(s);
            continue;
        }
        Sample<S> t = s;
        t.y -= r.num_ids;
        if (first_seen.insert({t.y, t.c}).second)
            b.query.samples.push_back(std::move(t));
        else
            b.gallery.samples.push_back(std::move(t));
    }

    b.train_sct = make_sct_split(b.train_full, r.seed);
    if (r.overlap_ratio > 0.0)
        b.train_sct = inject_overlap(b.train_sct, b.train_full, r.overlap_ratio, r.seed);
    return b;
}

struct RunMetrics {
    double map = 0, r1 = 0, r5 = 0, r10 = 0;
    double probe_acc = 0, probe_chance = 0;
    double order_rate = 0;
};

template <class S>
VectorXi labels_of(const Dataset<S>& ds) {
    VectorXi v(ds.size());
    for (Index i = 0; i < ds.size(); ++i) v[i] = ds.samples[std::size_t(i)].y;
    return v;
}

template <class S>
VectorXi cameras_of(const Dataset<S>& ds) {
    VectorXi v(ds.size());
    for (Index i = 0; i < ds.size(); ++i) v[i] = ds.samples[std::size_t(i)].c;
    return v;
}

// PK batches over a labeled embedding set, for the order-rate diagnostic.
template <class S>
std::vector<std::vector<Index>> sample_order_batches(const Dataset<S>& ds, int p, int k,
                                                     int trials, std::uint64_t seed) {
    Rng rng = substream(seed, "order");
    const auto imgs = images_per_id(ds);
    std::vector<std::vector<Index>> batches;
    batches.reserve(std::size_t(trials));
    for (int t = 0; t < trials; ++t) batches.push_back(pk_sample(imgs, p, k, rng));
    return batches;
}

// Retrieval metrics plus the invariance diagnostics, computed on the held-out
// partition (the gallery carries camera structure the trainer never saw, so
// the probe reads style rather than memorized identities).
template <class S>
RunMetrics evaluate_checkpoint(const EncoderParams<S>& params, const Benchmark<S>& b,
                               const RunConfig& r) {
    const MatrixX<S> qe = extract(b.query, params);
    const MatrixX<S> ge = extract(b.gallery, params);
    const auto ret = evaluate(qe, labels_of(b.query), cameras_of(b.query), ge,
                              labels_of(b.gallery), cameras_of(b.gallery));

    RunMetrics m;
    m.map = ret.map;
    m.r1 = ret.cmc.at(1);
    m.r5 = ret.cmc.at(5);
    m.r10 = ret.cmc.at(10);

    const auto probe = camera_probe(ge, cameras_of(b.gallery), r.seed, probe_kind(r),
                                    r.probe_iters);
    m.probe_acc = probe.accuracy;
    m.probe_chance = probe.chance;

    const auto batches = sample_order_batches(b.gallery, r.p, r.k, r.order_trials, r.seed);
    m.order_rate = mcnl_order_rate(ge, labels_of(b.gallery), cameras_of(b.gallery), batches);
    return m;
}

template <class S>
RunMetrics train_and_eval(const Benchmark<S>& b, const RunConfig& r) {
    const TrainConfig<S> tc = train_config<S>(r);
    const auto state = train(b.train_sct, tc);
    return evaluate_checkpoint(state.params, b, r);
}

inline double mean_of(const std::vector<double>& v) {
    double s = 0;
    for (const double x : v) s += x;
    return v.empty() ? 0.0 : s / double(v.size());
}

inline double std_of(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean_of(v);
    double s = 0;
    for (const double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / double(v.size() - 1));
}

}  // namespace iici
