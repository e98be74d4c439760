#include "fog/fogctl/commands.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <ostream>
#include <thread>

#include "CLI11.hpp"
#include "fog/fogctl/checks.hpp"
#include "fog/fogctl/run_config.hpp"

namespace fog::cli {
namespace fs = std::filesystem;
namespace {

const std::vector<double> kDefaultGridLr = {1e-2, 5e-3, 1e-3, 5e-4};
const std::vector<double> kDefaultGridWd = {1e-3, 1e-6, 0.0};

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

std::string grouped(long long v) {
    std::string digits = std::to_string(v < 0 ? -v : v);
    std::string out;
    for (std::size_t i = 0; i < digits.size(); ++i) {
        if (i > 0 && (digits.size() - i) % 3 == 0) out += ',';
        out += digits[i];
    }
    return (v < 0 ? "-" : "") + out;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
}

bool occupied(const fs::path& p) {
    if (!fs::exists(p)) return false;
    return !fs::is_directory(p) || !fs::is_empty(p);
}

// ---- gen ------------------------------------------------------------------

struct GenArgs {
    std::string generator;
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    bool force = false;
};

int cmd_gen(const GenArgs& a, std::ostream& out) {
    DataSpec spec;
    if (!a.config.empty()) {
        std::ifstream in(a.config);
        if (!in) throw ConfigError("cannot open config " + a.config);
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(in);
        } catch (const nlohmann::json::parse_error& e) {
            throw ConfigError(a.config + ": " + e.what());
        }
        if (j.contains("model")) {
            spec = run_config_from_json(j).data;
        } else {
            nlohmann::ordered_json wrapped = {{"model", "pattern/fog"}, {"data", j}};
            spec = run_config_from_json(wrapped).data;
        }
    }
    if (!a.generator.empty()) {
        if (!spec.generator.empty() && spec.generator != a.generator)
            throw ConfigError("generator '" + a.generator + "' conflicts with config generator '" + spec.generator + "'");
        spec.generator = a.generator;
    }
    if (!spec.path.empty()) throw ConfigError("gen needs a generator, not a dataset path");
    if (spec.generator.empty()) throw ConfigError("gen needs a generator name or --config");
    check_generator_params(spec.generator, spec.params);
    if (occupied(a.out) && !a.force) throw ConfigError(a.out + " exists; pass --force to overwrite");

    const std::uint64_t seed = a.seed ? *a.seed : spec.seed.value_or(0);
    DatasetSplit d = generate(spec.generator, spec.params, seed);
    if (fs::path(a.out).has_parent_path()) fs::create_directories(fs::path(a.out).parent_path());
    save_dataset(d, a.out);
    out << "wrote " << d.size() << " graphs (train " << d.train.size() << ", val " << d.val.size() << ", test "
        << d.test.size() << ") from " << d.generator << " seed " << seed << " to " << a.out << "\n";
    return kOk;
}

// ---- train ----------------------------------------------------------------

struct TrainArgs {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::vector<std::uint64_t> seeds;
    bool grid = false;
    unsigned jobs = 1;
    bool force = false;
    std::string out;
};

struct Cell {
    double lr = 0;
    double wd = 0;
    std::uint64_t seed = 0;
    fs::path dir;
    std::string label;
};

struct CellOutcome {
    bool ok = false;
    int code = kOk;
    std::string error;
    std::size_t epochs = 0;
    std::size_t best_epoch = 0;
    double best_val_loss = 0;
    EvalResult val;
    std::optional<EvalResult> test;
    std::string stop_reason;
};

nlohmann::ordered_json eval_json(const EvalResult& r) {
    return {{"loss", r.loss}, {"metric", r.metric_name}, {"value", r.metric}, {"items", r.items}};
}

CellOutcome run_cell(const RunConfig& base, const DatasetSplit& data, const Cell& cell) {
    CellOutcome o;
    try {
        RunConfig cfg = base;
        cfg.train.init_lr = cell.lr;
        cfg.train.weight_decay = cell.wd;
        cfg.train.grid_lr.clear();
        cfg.train.grid_wd.clear();
        apply_seed(cfg, cell.seed);
        cfg.output_dir = cell.dir;

        Model<float> model(fit_to_dataset(cfg.model, data), cell.seed);
        TrainResult<float> res = train(model, data, cfg.train);
        o.epochs = res.history.size();
        o.best_epoch = res.best_epoch;
        o.best_val_loss = res.best_val_loss;
        o.stop_reason = res.stop_reason;
        o.val = evaluate(model, data.val, cfg.train.batch_size);
        if (!data.test.empty()) o.test = evaluate(model, data.test, cfg.train.batch_size);

        fs::create_directories(cell.dir);
        write_text(cell.dir / "config.json", to_json(cfg).dump(2) + "\n");
        write_history_csv(cell.dir / "history.csv", res.history);
        write_history_jsonl(cell.dir / "history.jsonl", res.history);
        nlohmann::ordered_json meta = {{"best_epoch", res.best_epoch}, {"seed", cell.seed}};
        save_checkpoint(model, cell.dir / "best.ckpt", meta);
        nlohmann::ordered_json result = {{"epochs", o.epochs},       {"best_epoch", o.best_epoch},
                                         {"best_val_loss", o.best_val_loss}, {"stop_reason", o.stop_reason},
                                         {"val", eval_json(o.val)}};
        if (o.test) result["test"] = eval_json(*o.test);
        write_text(cell.dir / "result.json", result.dump(2) + "\n");
        o.ok = true;
    } catch (const std::invalid_argument& e) {
        o.code = kValidation;
        o.error = e.what();
    } catch (const std::exception& e) {
        o.code = kRuntime;
        o.error = e.what();
    }
    return o;
}

std::vector<CellOutcome> run_cells(const RunConfig& cfg, const DatasetSplit& data, const std::vector<Cell>& cells,
                                   unsigned jobs) {
    std::vector<CellOutcome> outcomes(cells.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i; (i = next++) < cells.size();) outcomes[i] = run_cell(cfg, data, cells[i]);
    };
    const unsigned n = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(cells.size())));
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < n; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    return outcomes;
}

struct Stat {
    double mean = 0;
    double std = 0;
};

Stat stat(const std::vector<double>& xs) {
    Stat s;
    if (xs.empty()) return s;
    for (double x : xs) s.mean += x / static_cast<double>(xs.size());
    if (xs.size() > 1) {
        for (double x : xs) s.std += (x - s.mean) * (x - s.mean);
        s.std = std::sqrt(s.std / static_cast<double>(xs.size() - 1));
    }
    return s;
}

int cmd_train(const TrainArgs& a, std::ostream& out, std::ostream& err) {
    RunConfig cfg = load_run_config(a.config);
    if (a.seed) apply_seed(cfg, *a.seed);
    if (!a.out.empty()) cfg.output_dir = a.out;
    if (a.jobs == 0) throw ConfigError("--jobs must be positive");

    std::vector<double> lrs = {cfg.train.init_lr}, wds = {cfg.train.weight_decay};
    if (a.grid) {
        lrs = cfg.train.grid_lr.empty() ? kDefaultGridLr : cfg.train.grid_lr;
        wds = cfg.train.grid_wd.empty() ? kDefaultGridWd : cfg.train.grid_wd;
    }
    std::vector<std::uint64_t> seeds = a.seeds.empty() ? std::vector<std::uint64_t>{cfg.seed} : a.seeds;

    std::vector<Cell> cells;
    for (double lr : lrs)
        for (double wd : wds)
            for (std::uint64_t s : seeds) {
                Cell c{lr, wd, s, cfg.output_dir, ""};
                if (a.grid) {
                    const std::string name = "lr=" + fmt("%g", lr) + "_wd=" + fmt("%g", wd);
                    c.dir /= name;
                    c.label = name;
                }
                if (!a.seeds.empty()) {
                    c.dir /= "seed=" + std::to_string(s);
                    c.label += (c.label.empty() ? "" : " ") + ("seed=" + std::to_string(s));
                }
                if (c.label.empty()) c.label = cfg.output_dir.string();
                cells.push_back(c);
            }

    if (occupied(cfg.output_dir)) {
        if (!a.force) throw ConfigError("run directory " + cfg.output_dir.string() + " exists; pass --force to overwrite");
        fs::remove_all(cfg.output_dir);
    }
    fs::create_directories(cfg.output_dir);

    // Data is fixed across seeds; only initialisation and shuffling vary.
    const DatasetSplit data = make_dataset(cfg.data, seeds.front());
    if (cfg.data.path.empty()) save_dataset(data, cfg.output_dir / "dataset.jsonl");
    write_text(cfg.output_dir / "run.json", to_json(cfg).dump(2) + "\n");

    out << "training " << (cfg.preset.empty() ? to_string(cfg.model.family) : cfg.preset) << " on " << data.generator
        << " (" << data.train.size() << "/" << data.val.size() << "/" << data.test.size() << " graphs), "
        << cells.size() << " run" << (cells.size() == 1 ? "" : "s") << "\n";
    const std::vector<CellOutcome> outcomes = run_cells(cfg, data, cells, a.jobs);

    int code = kOk;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        const CellOutcome& o = outcomes[i];
        if (!o.ok) {
            err << cells[i].label << ": " << o.error << "\n";
            code = std::max(code, o.code);
            continue;
        }
        out << cells[i].label << "  epochs " << o.epochs << "  best " << o.best_epoch << "  val_loss "
            << fmt("%.5f", o.best_val_loss) << "  val_" << o.val.metric_name << " " << fmt("%.5f", o.val.metric);
        if (o.test) out << "  test_" << o.test->metric_name << " " << fmt("%.5f", o.test->metric);
        out << "  (" << o.stop_reason << ")\n";
    }
    if (cells.size() == 1 || code != kOk) return code;

    // Aggregate over seeds per grid cell; pick the cell with the lowest mean validation loss.
    nlohmann::ordered_json summary = nlohmann::ordered_json::array();
    std::size_t best = 0;
    double best_loss = INFINITY;
    const std::size_t per = seeds.size();
    for (std::size_t g = 0; g * per < cells.size(); ++g) {
        std::vector<double> vl, vm, tm;
        for (std::size_t k = 0; k < per; ++k) {
            const CellOutcome& o = outcomes[g * per + k];
            vl.push_back(o.best_val_loss);
            vm.push_back(o.val.metric);
            if (o.test) tm.push_back(o.test->metric);
        }
        const Stat l = stat(vl), v = stat(vm), t = stat(tm);
        nlohmann::ordered_json row = {{"lr", cells[g * per].lr}, {"weight_decay", cells[g * per].wd},
                                      {"seeds", per},           {"val_loss_mean", l.mean},
                                      {"val_metric_mean", v.mean}, {"val_metric_std", v.std}};
        if (!tm.empty()) {
            row["test_metric_mean"] = t.mean;
            row["test_metric_std"] = t.std;
        }
        summary.push_back(row);
        if (l.mean < best_loss) best_loss = l.mean, best = g;
        if (per > 1) {
            out << "lr=" << fmt("%g", cells[g * per].lr) << " wd=" << fmt("%g", cells[g * per].wd) << "  "
                << per << " seeds  test_" << outcomes[g * per].val.metric_name << " "
                << fmt("%.5f", t.mean) << " +- " << fmt("%.5f", t.std) << "\n";
        }
    }
    if (a.grid)
        out << "best cell: lr=" << fmt("%g", cells[best * per].lr) << " wd=" << fmt("%g", cells[best * per].wd)
            << " (mean val loss " << fmt("%.5f", best_loss) << ")\n";
    write_text(cfg.output_dir / "summary.json", summary.dump(2) + "\n");
    return code;
}

// ---- eval -----------------------------------------------------------------

struct EvalArgs {
    std::string checkpoint;
    std::string dataset;
    std::string split = "test";
    std::size_t batch_size = 128;
    std::string out;
    bool force = false;
};

int cmd_eval(const EvalArgs& a, std::ostream& out) {
    if (!fs::exists(a.checkpoint)) throw CheckpointError("checkpoint not found: " + a.checkpoint);
    if (a.batch_size == 0) throw ConfigError("--batch-size must be positive");
    Model<float> model = load_checkpoint<float>(a.checkpoint);
    const DatasetSplit data = load_dataset(a.dataset);
    if (data.task != model.config().task)
        throw ConfigError("checkpoint task " + to_string(model.config().task) + " does not match dataset task " +
                          to_string(data.task));
    const std::vector<Graph>* graphs = a.split == "train" ? &data.train : a.split == "val" ? &data.val : &data.test;
    const EvalResult r = evaluate(model, *graphs, a.batch_size);
    nlohmann::ordered_json j = {{"checkpoint", a.checkpoint}, {"dataset", a.dataset}, {"split", a.split},
                                {"loss", r.loss},           {"metric", r.metric_name},   {"value", r.metric},
                                {"items", r.items}};
    const std::string text = j.dump(2) + "\n";
    if (!a.out.empty()) {
        if (occupied(a.out) && !a.force) throw ConfigError(a.out + " exists; pass --force to overwrite");
        write_text(a.out, text);
    }
    out << text;
    return kOk;
}

// ---- gradcheck ------------------------------------------------------------

struct GradArgs {
    std::string family = "all";
    std::uint64_t seed = 0;
    std::size_t graphs = 5;
    double tol = 1e-4;
};

int cmd_gradcheck(const GradArgs& a, std::ostream& out) {
    if (a.graphs == 0) throw ConfigError("--graphs must be positive");
    std::vector<Family> families;
    if (a.family == "all") {
        families = all_families();
    } else {
        try {
            families.push_back(family_from_string(a.family));
        } catch (const std::exception& e) {
            throw ConfigError(e.what());
        }
    }
    bool all_ok = true;
    for (Family f : families) {
        std::map<std::string, GradCheckEntry> worst;
        std::vector<std::string> order;
        double family_max = 0;
        for (std::size_t k = 0; k < a.graphs; ++k) {
            const GradCheckReport r = gradcheck_layer(f, a.seed + k);
            for (const GradCheckEntry& e : r.entries) {
                auto [it, fresh] = worst.try_emplace(e.name, e);
                if (fresh) order.push_back(e.name);
                it->second.max_rel_error = std::max(it->second.max_rel_error, e.max_rel_error);
                it->second.max_abs_error = std::max(it->second.max_abs_error, e.max_abs_error);
            }
            family_max = std::max(family_max, r.max_rel_error());
        }
        const bool ok = family_max < a.tol;
        all_ok = all_ok && ok;
        out << to_string(f) << "  graphs " << a.graphs << "  seeds " << a.seed << ".." << a.seed + a.graphs - 1 << "\n";
        for (const std::string& name : order) {
            const GradCheckEntry& e = worst.at(name);
            char line[160];
            std::snprintf(line, sizeof line, "  %-28s %6zu  rel %.3e  abs %.3e%s\n", name.c_str(), e.elements,
                          e.max_rel_error, e.max_abs_error, e.max_rel_error < a.tol ? "" : "  FAIL");
            out << line;
        }
        out << "  " << (ok ? "PASS" : "FAIL") << "  max rel " << fmt("%.3e", family_max) << " (tol "
            << fmt("%g", a.tol) << ")\n";
    }
    return all_ok ? kOk : kCheckFailed;
}

// ---- params ---------------------------------------------------------------

int cmd_params(const std::vector<std::string>& names, std::ostream& out) {
    std::vector<const Preset*> list;
    for (const std::string& n : names) {
        if (n == "all") {
            for (const Preset& p : presets()) list.push_back(&p);
        } else {
            list.push_back(&find_preset(n));
        }
    }
    for (const Preset* p : list) {
        Model<float> m(p->model, 0);
        const auto total = static_cast<long long>(m.count_params());
        const auto target = static_cast<long long>(p->target_params);
        const long long delta = total - target;
        out << p->name << "\n";
        out << "  target    " << grouped(target) << "\n";
        out << "  computed  " << grouped(total) << "\n";
        out << "  delta     " << (delta >= 0 ? "+" : "") << grouped(delta) << " ("
            << fmt("%+.2f%%", 100.0 * static_cast<double>(delta) / static_cast<double>(target)) << ")\n";
        for (const ParamComponent& c : m.breakdown()) {
            char line[96];
            std::snprintf(line, sizeof line, "    %-12s %10s\n", c.name.c_str(),
                          grouped(static_cast<long long>(c.count)).c_str());
            out << line;
        }
    }
    return kOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"fogctl: generate datasets, train and audit graph networks"};
    app.require_subcommand(1);

    GenArgs gen;
    CLI::App* g = app.add_subcommand("gen", "Generate a synthetic dataset file");
    g->add_option("generator", gen.generator, "Generator name")->check(CLI::IsMember(generator_names()));
    g->add_option("--config", gen.config, "Run config or data object (JSON)");
    g->add_option("--seed", gen.seed, "Generator seed");
    g->add_option("--out", gen.out, "Output dataset path")->required();
    g->add_flag("--force", gen.force, "Overwrite an existing file");

    TrainArgs tr;
    CLI::App* t = app.add_subcommand("train", "Train a model from a run config");
    t->add_option("--config", tr.config, "Run config (JSON)")->required()->check(CLI::ExistingFile);
    auto* seed_opt = t->add_option("--seed", tr.seed, "Run seed");
    t->add_option("--seeds", tr.seeds, "Comma-separated seeds; one run each")->delimiter(',')->excludes(seed_opt);
    t->add_flag("--grid", tr.grid, "Sweep the learning-rate / weight-decay grid");
    t->add_option("--jobs", tr.jobs, "Runs trained in parallel");
    t->add_flag("--force", tr.force, "Replace an existing run directory");
    t->add_option("--out", tr.out, "Run directory (overrides output_dir)");

    EvalArgs ev;
    CLI::App* e = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset split");
    e->add_option("checkpoint", ev.checkpoint, "Checkpoint file")->required();
    e->add_option("dataset", ev.dataset, "Dataset file")->required();
    e->add_option("--split", ev.split, "train | val | test")->check(CLI::IsMember({"train", "val", "test"}));
    e->add_option("--batch-size", ev.batch_size, "Graphs per batch");
    e->add_option("--out", ev.out, "Also write the metrics JSON here");
    e->add_flag("--force", ev.force, "Overwrite --out");

    GradArgs gc;
    CLI::App* c = app.add_subcommand("gradcheck", "Finite-difference check of layer gradients");
    c->add_option("family", gc.family, "Layer family or 'all'");
    c->add_option("--seed", gc.seed, "First seed");
    c->add_option("--graphs", gc.graphs, "Random graphs per family");
    c->add_option("--tol", gc.tol, "Maximum relative error");

    std::vector<std::string> preset_args;
    CLI::App* p = app.add_subcommand("params", "Parameter count of presets against their targets");
    p->add_option("preset", preset_args, "Preset names or 'all'")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& ex) {
        return app.exit(ex, out, err);
    } catch (const CLI::CallForAllHelp& ex) {
        return app.exit(ex, out, err);
    } catch (const CLI::ParseError& ex) {
        app.exit(ex, out, err);
        return kValidation;
    }

    try {
        if (g->parsed()) return cmd_gen(gen, out);
        if (t->parsed()) return cmd_train(tr, out, err);
        if (e->parsed()) return cmd_eval(ev, out);
        if (c->parsed()) return cmd_gradcheck(gc, out);
        if (p->parsed()) return cmd_params(preset_args, out);
    } catch (const std::invalid_argument& ex) {
        err << "error: " << ex.what() << "\n";
        return kValidation;
    } catch (const std::exception& ex) {
        err << "error: " << ex.what() << "\n";
        return kRuntime;
    }
    return kValidation;
}

}  // namespace fog::cli
