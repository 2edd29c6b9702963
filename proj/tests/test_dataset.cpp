#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "iici/dataset.hpp"
#include "iici/dataset_io.hpp"

using iici::Dataset;
using iici::SynthConfig;

namespace {

SynthConfig<float> small_cfg() {
    SynthConfig<float> cfg;
    cfg.num_ids = 10;
    cfg.num_cameras = 3;
    cfg.images_per_id = 2;
    cfg.d_raw = 12;
    cfg.seed = 5;
    return cfg;
}

template <class S>
bool equal_datasets(const Dataset<S>& a, const Dataset<S>& b) {
    if (a.num_ids != b.num_ids || a.num_cameras != b.num_cameras ||
        a.samples.size() != b.samples.size())
        return false;
    for (std::size_t i = 0; i < a.samples.size(); ++i) {
        const auto& x = a.samples[i];
        const auto& y = b.samples[i];
        if (x.y != y.y || x.c != y.c || x.u != y.u || x.style_truth != y.style_truth)
            return false;
        if (x.x.size() != y.x.size() || x.x != y.x) return false;
    }
    return true;
}

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() / "iici_test_dataset";
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
    std::string file(const char* name) const { return (path / name).string(); }
};

}  // namespace

TEST_CASE("generation counts and label ranges") {
    const auto ds = iici::generate_synthetic(small_cfg());
    CHECK(ds.size() == 60);  // 10 ids x 3 cameras x 2 images
    CHECK(ds.num_ids == 10);
    CHECK(ds.num_cameras == 3);
    CHECK_NOTHROW(iici::check_labels(ds));
    // every identity appears under every camera
    for (int y = 0; y < 10; ++y) CHECK(iici::cameras_per_id(ds)[std::size_t(y)].size() == 3);
}

TEST_CASE("generation is a pure function of the config") {
    const auto a = iici::generate_synthetic(small_cfg());
    const auto b = iici::generate_synthetic(small_cfg());
    CHECK(equal_datasets(a, b));
    auto cfg = small_cfg();
    cfg.seed = 6;
    CHECK_FALSE(equal_datasets(a, iici::generate_synthetic(cfg)));
}

TEST_CASE("zero camera bias leaves only gain and noise differences") {
    auto cfg = small_cfg();
    cfg.camera_bias_scale = 0.0f;
    cfg.camera_gain_jitter = 0.0f;
    cfg.noise_scale = 0.0f;
    const auto ds = iici::generate_synthetic(cfg);
    // identical identity across cameras produces identical observations
    for (const auto& s : ds.samples)
        CHECK((s.x - ds.samples[std::size_t(s.y * 6)].x).norm() == 0.0f);
}

TEST_CASE("rejects empty configurations") {
    auto cfg = small_cfg();
    cfg.num_ids = 0;
    CHECK_THROWS_AS((void)iici::generate_synthetic(cfg), std::invalid_argument);
    cfg = small_cfg();
    cfg.num_cameras = 0;
    CHECK_THROWS_AS((void)iici::generate_synthetic(cfg), std::invalid_argument);
}

TEST_CASE("strong camera bias makes cameras separable from raw observations") {
    SynthConfig<float> cfg;
    cfg.num_ids = 40;
    cfg.num_cameras = 4;
    cfg.images_per_id = 4;
    cfg.d_raw = 32;
    cfg.camera_bias_scale = 5.0f;
    cfg.noise_scale = 0.05f;
    cfg.seed = 9;
    const auto ds = iici::generate_synthetic(cfg);

    // nearest-centroid camera classifier on raw x
    iici::MatrixX<float> centroids = iici::MatrixX<float>::Zero(4, 32);
    std::vector<int> counts(4, 0);
    for (const auto& s : ds.samples) {
        centroids.row(s.c) += s.x.transpose();
        counts[std::size_t(s.c)] += 1;
    }
    for (int c = 0; c < 4; ++c) centroids.row(c) /= float(counts[std::size_t(c)]);
    int correct = 0;
    for (const auto& s : ds.samples) {
        int best = 0;
        float best_d = (s.x.transpose() - centroids.row(0)).norm();
        for (int c = 1; c < 4; ++c) {
            const float d = (s.x.transpose() - centroids.row(c)).norm();
            if (d < best_d) {
                best_d = d;
                best = c;
            }
        }
        if (best == s.c) ++correct;
    }
    CHECK(double(correct) / double(ds.size()) > 0.99);
}

TEST_CASE("sct split keeps one camera per identity and all its images") {
    const auto full = iici::generate_synthetic(small_cfg());
    const auto sct = iici::make_sct_split(full, 17);
    CHECK(sct.size() == 20);  // 10 ids x 1 camera x 2 images
    CHECK(sct.num_ids == 10);
    CHECK(iici::is_single_camera_per_id(sct));

    // identity partition: union of per-camera id sets covers [0, Y)
    std::set<int> seen;
    Eigen::Index total = 0;
    for (int c = 0; c < sct.num_cameras; ++c) {
        for (const int y : iici::ids_of_camera(sct, c)) seen.insert(y);
        for (const auto& s : sct.samples)
            if (s.c == c) ++total;
    }
    CHECK(seen.size() == 10);
    CHECK(total == sct.size());

    // deterministic
    const auto again = iici::make_sct_split(full, 17);
    CHECK(equal_datasets(sct, again));
}

TEST_CASE("sct split passes single-camera identities through") {
    auto cfg = small_cfg();
    cfg.num_cameras = 1;
    const auto full = iici::generate_synthetic(cfg);
    const auto sct = iici::make_sct_split(full, 3);
    CHECK(equal_datasets(full, sct));
}

TEST_CASE("overlap injection") {
    const auto full = iici::generate_synthetic(small_cfg());
    const auto sct = iici::make_sct_split(full, 17);

    SUBCASE("ratio zero is the identity transformation") {
        const auto out = iici::inject_overlap(sct, full, 0.0, 23);
        CHECK(equal_datasets(out, sct));
    }
    SUBCASE("ratio 0.3 adds one extra camera group for three identities") {
        const auto out = iici::inject_overlap(sct, full, 0.3, 23);
        CHECK(out.num_ids == 13);
        CHECK(out.size() == sct.size() + 3 * 2);
        CHECK(iici::is_single_camera_per_id(out));  // fresh labels keep the property
    }
    SUBCASE("ratio one doubles the identity count") {
        const auto out = iici::inject_overlap(sct, full, 1.0, 23);
        CHECK(out.num_ids == 20);
        CHECK(out.size() == 2 * sct.size());
    }
    SUBCASE("ratio outside [0,1] is rejected") {
        CHECK_THROWS_AS((void)iici::inject_overlap(sct, full, 1.5, 23), std::invalid_argument);
        CHECK_THROWS_AS((void)iici::inject_overlap(sct, full, -0.1, 23), std::invalid_argument);
    }
}

TEST_CASE("save/load round-trips both formats") {
    TempDir tmp;
    const auto ds = iici::generate_synthetic(small_cfg());

    for (const char* name : {"ds.bin", "ds.csv"}) {
        iici::save_dataset(ds, tmp.file(name));
        const auto back = iici::load_dataset<float>(tmp.file(name));
        CHECK(equal_datasets(ds, back));
    }
}

TEST_CASE("file errors are reported distinctly") {
    TempDir tmp;

    SUBCASE("empty file reports a header error") {
        std::ofstream(tmp.file("empty.bin")).close();
        CHECK_THROWS_AS((void)iici::load_dataset<float>(tmp.file("empty.bin")), iici::HeaderError);
        std::ofstream(tmp.file("empty.csv")).close();
        CHECK_THROWS_AS((void)iici::load_dataset<float>(tmp.file("empty.csv")), iici::HeaderError);
    }
    SUBCASE("label out of range reports a label error") {
        std::ofstream os(tmp.file("bad.csv"));
        os << "iici_dataset,1,2,1,1,2\n";
        os << "5,0,-1,0,1.0,2.0\n";  // y=5 with Y=2
        os.close();
        CHECK_THROWS_AS((void)iici::load_dataset<float>(tmp.file("bad.csv")), iici::LabelRangeError);
    }
    SUBCASE("truncated file reports a truncation error") {
        const auto ds = iici::generate_synthetic(small_cfg());
        iici::save_dataset(ds, tmp.file("trunc.bin"));
        const auto full_size = std::filesystem::file_size(tmp.file("trunc.bin"));
        std::filesystem::resize_file(tmp.file("trunc.bin"), full_size - 10);
        CHECK_THROWS_AS((void)iici::load_dataset<float>(tmp.file("trunc.bin")), iici::TruncatedError);
    }
    SUBCASE("wrong magic reports a header error") {
        std::ofstream os(tmp.file("junk.bin"), std::ios::binary);
        os << "NOTADATASETFILE.........";
        os.close();
        CHECK_THROWS_AS((void)iici::load_dataset<float>(tmp.file("junk.bin")), iici::HeaderError);
    }
}
