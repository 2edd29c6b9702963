// iici command-line interface: data generation, training, evaluation, and the
// ablation/sweep experiment drivers. All numeric work runs in float; files are
// the versioned binary/CSV formats from the library headers.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "iici/config.hpp"
#include "iici/dataset_io.hpp"
#include "iici/experiments.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using Real = float;

namespace {

iici::RunConfig load_config(const std::string& path) {
    if (path.empty()) {
        iici::RunConfig cfg;
        iici::apply_env_seed(cfg);
        return cfg;
    }
    return iici::parse_config_file(path);
}

std::string data_file(const std::string& data, const char* name) {
    if (fs::is_directory(data)) return (fs::path(data) / name).string();
    return data;
}

void write_trace(const iici::TrainTrace& trace, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw iici::DataError("cannot open " + path + " for writing");
    std::size_t si = 0;
    for (const auto& ep : trace.epochs) {
        while (si < trace.steps.size() && trace.steps[si].epoch == ep.epoch) {
            const auto& st = trace.steps[si++];
            json j{{"type", "step"},     {"epoch", st.epoch},   {"step", st.step},
                   {"total", st.total},  {"base", st.base},     {"intra1", st.intra1},
                   {"intra2", st.intra2}, {"inter1", st.inter1}, {"inter2", st.inter2},
                   {"lr", st.lr}};
            os << j.dump() << '\n';
        }
        json j{{"type", "epoch"},
               {"epoch", ep.epoch},
               {"mean_total", ep.mean_total},
               {"lr", ep.lr},
               {"num_envs", ep.num_envs}};
        os << j.dump() << '\n';
    }
}

void write_results(const iici::RunMetrics& m, const std::string& run_id,
                   const std::string& variant, std::uint64_t seed, const fs::path& dir) {
    json j{{"run_id", run_id},
           {"variant", variant},
           {"seed", seed},
           {"map", m.map},
           {"rank1", m.r1},
           {"rank5", m.r5},
           {"rank10", m.r10},
           {"probe_accuracy", m.probe_acc},
           {"probe_chance", m.probe_chance},
           {"order_rate", m.order_rate}};
    std::ofstream js(dir / "results.json");
    js << j.dump(2) << '\n';

    std::ofstream cs(dir / "results.csv");
    cs << "run_id,variant,seed,map,rank1,rank5,rank10,probe_accuracy,order_rate\n";
    cs << run_id << ',' << variant << ',' << seed << ',' << m.map << ',' << m.r1 << ','
       << m.r5 << ',' << m.r10 << ',' << m.probe_acc << ',' << m.order_rate << '\n';
}

int cmd_gen_data(const std::string& config, const std::string& out) {
    const auto cfg = load_config(config);
    fs::create_directories(out);
    const auto b = iici::generate_benchmark<Real>(cfg);
    iici::save_dataset(b.train_full, (fs::path(out) / "train_full.bin").string());
    iici::save_dataset(b.train_sct, (fs::path(out) / "train_sct.bin").string());
    iici::save_dataset(b.query, (fs::path(out) / "query.bin").string());
    iici::save_dataset(b.gallery, (fs::path(out) / "gallery.bin").string());
    std::cout << "wrote " << out << ": train_full N=" << b.train_full.size()
              << ", train_sct N=" << b.train_sct.size() << " (Y=" << b.train_sct.num_ids
              << "), query N=" << b.query.size() << ", gallery N=" << b.gallery.size()
              << "\n";
    return 0;
}

int cmd_train(const std::string& config, const std::string& data, const std::string& variant,
              std::int64_t seed, const std::string& out) {
    auto cfg = load_config(config);
    if (!variant.empty()) cfg.variant = variant;
    if (seed >= 0) cfg.seed = std::uint64_t(seed);

    const auto ds = iici::load_dataset<Real>(data_file(data, "train_sct.bin"));
    const auto tcfg = iici::train_config<Real>(cfg);
    const auto state = iici::train(ds, tcfg);

    fs::create_directories(out);
    iici::save_checkpoint(state, {cfg.variant, cfg.seed},
                          (fs::path(out) / "checkpoint.bin").string());
    write_trace(state.trace, (fs::path(out) / "trace.jsonl").string());
    std::cout << "trained " << cfg.variant << " seed=" << cfg.seed << " epochs="
              << tcfg.epochs << ", final mean loss="
              << (state.trace.epochs.empty() ? 0.0 : state.trace.epochs.back().mean_total)
              << "\n";
    return 0;
}

int cmd_eval(const std::string& checkpoint, const std::string& data, const std::string& config,
             const std::string& run_id, const std::string& out) {
    auto cfg = load_config(config);
    iici::CheckpointMeta meta;
    const auto state = iici::load_checkpoint<Real>(checkpoint, &meta);
    cfg.seed = meta.seed;

    iici::Benchmark<Real> b;
    b.query = iici::load_dataset<Real>(data_file(data, "query.bin"));
    b.gallery = iici::load_dataset<Real>(data_file(data, "gallery.bin"));

    const auto m = iici::evaluate_checkpoint(state.params, b, cfg);
    fs::create_directories(out);
    write_results(m, run_id, meta.variant, meta.seed, out);
    std::cout << "map=" << m.map << " rank1=" << m.r1 << " rank5=" << m.r5 << " rank10="
              << m.r10 << " probe=" << m.probe_acc << " order_rate=" << m.order_rate << "\n";
    return 0;
}

int cmd_ablate(const std::string& config, int seeds, const std::string& out) {
    const auto base = load_config(config);
    const std::vector<std::string> variants = {"A1", "A2", "A3", "A4", "A5",
                                               "A6", "A7", "A8", "A9"};
    fs::create_directories(out);
    std::ofstream runs(fs::path(out) / "ablate_runs.csv");
    runs << "variant,seed,map,rank1,rank5,rank10,probe_accuracy,order_rate\n";

    std::map<std::string, std::vector<double>> r1s, maps;
    for (int s = 0; s < seeds; ++s) {
        auto cfg = base;
        cfg.seed = base.seed + std::uint64_t(s);
        const auto b = iici::generate_benchmark<Real>(cfg);
        for (const auto& v : variants) {
            cfg.variant = v;
            const auto m = iici::train_and_eval(b, cfg);
            runs << v << ',' << cfg.seed << ',' << m.map << ',' << m.r1 << ',' << m.r5
                 << ',' << m.r10 << ',' << m.probe_acc << ',' << m.order_rate << '\n';
            r1s[v].push_back(m.r1);
            maps[v].push_back(m.map);
            std::cout << v << " seed=" << cfg.seed << " map=" << m.map << " r1=" << m.r1
                      << "\n";
        }
    }

    std::ofstream cs(fs::path(out) / "ablate.csv");
    cs << "variant,rank1_mean,rank1_std,map_mean,map_std\n";
    for (const auto& v : variants)
        cs << v << ',' << iici::mean_of(r1s[v]) << ',' << iici::std_of(r1s[v]) << ','
           << iici::mean_of(maps[v]) << ',' << iici::std_of(maps[v]) << '\n';
    return 0;
}

int cmd_sweep(const std::string& config, const std::string& param,
              const std::vector<double>& values, int seeds, const std::string& out) {
    const auto base = load_config(config);
    if (param != "K1" && param != "K2" && param != "subcam" && param != "overlap")
        throw iici::ConfigError("sweep param must be one of K1, K2, subcam, overlap");

    fs::create_directories(out);
    std::ofstream cs(fs::path(out) / "sweep.csv");
    cs << "param,value,seeds,map_mean,map_std,rank1_mean,rank1_std\n";

    for (const double v : values) {
        std::vector<double> maps, r1s;
        for (int s = 0; s < seeds; ++s) {
            auto cfg = base;
            cfg.seed = base.seed + std::uint64_t(s);
            if (param == "K1")
                cfg.k1 = int(v);
            else if (param == "K2")
                cfg.k2 = int(v);
            else if (param == "subcam")
                cfg.forced_splits = int(v);
            else
                cfg.overlap_ratio = v;
            const auto b = iici::generate_benchmark<Real>(cfg);
            const auto m = iici::train_and_eval(b, cfg);
            maps.push_back(m.map);
            r1s.push_back(m.r1);
            std::cout << param << "=" << v << " seed=" << cfg.seed << " map=" << m.map
                      << " r1=" << m.r1 << "\n";
        }
        cs << param << ',' << v << ',' << seeds << ',' << iici::mean_of(maps) << ','
           << iici::std_of(maps) << ',' << iici::mean_of(r1s) << ',' << iici::std_of(r1s)
           << '\n';
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"iici: intra/inter-camera invariance learning on synthetic re-id data"};
    app.require_subcommand(1);

    std::string config, out, data, variant, checkpoint, param, run_id = "run";
    std::int64_t seed = -1;
    int seeds = 5;
    std::vector<double> values;

    auto* gen = app.add_subcommand("gen-data", "generate a benchmark dataset bundle");
    gen->add_option("--config", config, "config file (key = value lines)");
    gen->add_option("--out", out, "output directory")->required();

    auto* tr = app.add_subcommand("train", "train one model");
    tr->add_option("--config", config, "config file");
    tr->add_option("--data", data, "dataset file or gen-data output directory")->required();
    tr->add_option("--variant", variant, "ablation variant A1..A9 (overrides config)");
    tr->add_option("--seed", seed, "seed (overrides config)");
    tr->add_option("--out", out, "output directory")->required();

    auto* ev = app.add_subcommand("eval", "evaluate a checkpoint");
    ev->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
    ev->add_option("--data", data, "dataset directory with query/gallery")->required();
    ev->add_option("--config", config, "config file");
    ev->add_option("--run-id", run_id, "label for the results row");
    ev->add_option("--out", out, "output directory")->required();

    auto* ab = app.add_subcommand("ablate", "run all variants over several seeds");
    ab->add_option("--config", config, "config file");
    ab->add_option("--seeds", seeds, "number of seeds");
    ab->add_option("--out", out, "output directory")->required();

    auto* sw = app.add_subcommand("sweep", "sweep one hyperparameter");
    sw->add_option("--config", config, "config file");
    sw->add_option("--param", param, "K1 | K2 | subcam | overlap")->required();
    sw->add_option("--values", values, "values to sweep")->required()->delimiter(',');
    sw->add_option("--seeds", seeds, "number of seeds");
    sw->add_option("--out", out, "output directory")->required();

    try {
        app.parse(argc, argv);
        if (gen->parsed()) return cmd_gen_data(config, out);
        if (tr->parsed()) return cmd_train(config, data, variant, seed, out);
        if (ev->parsed()) return cmd_eval(checkpoint, data, config, run_id, out);
        if (ab->parsed()) return cmd_ablate(config, seeds, out);
        if (sw->parsed()) return cmd_sweep(config, param, values, seeds, out);
        return 1;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const iici::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const iici::NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 3;
    } catch (const iici::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
