#include "fog/trainer/train.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>

#include "fog/trainer/losses.hpp"

namespace fog {

namespace {

std::vector<std::vector<const Graph*>> make_batches(const std::vector<Graph>& graphs, const std::vector<std::size_t>& order,
                                                    std::size_t batch_size) {
    std::vector<std::vector<const Graph*>> out;
    for (std::size_t i = 0; i < order.size(); i += batch_size) {
        std::vector<const Graph*> b;
        for (std::size_t j = i; j < std::min(order.size(), i + batch_size); ++j) b.push_back(&graphs[order[j]]);
        out.push_back(std::move(b));
    }
    return out;
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

void validate(const TrainConfig& cfg) {
    validate(PlateauConfig{cfg.lr_factor, cfg.patience, cfg.min_lr});
    if (!(cfg.init_lr >= 0.0)) throw ConfigError("init_lr must be non-negative");
    if (!(cfg.weight_decay >= 0.0)) throw ConfigError("weight_decay must be non-negative");
    if (cfg.batch_size == 0) throw ConfigError("batch_size must be positive");
    if (cfg.max_epochs == 0) throw ConfigError("max_epochs must be positive");
    for (double lr : cfg.grid_lr)
        if (!(lr >= 0.0)) throw ConfigError("grid learning rates must be non-negative");
    for (double wd : cfg.grid_wd)
        if (!(wd >= 0.0)) throw ConfigError("grid weight decays must be non-negative");
}

TrainConfig train_config_from_preset(const PresetTraining& p) {
    TrainConfig c;
    c.init_lr = p.init_lr;
    c.weight_decay = p.weight_decay;
    c.patience = p.patience;
    c.lr_factor = p.lr_factor;
    c.min_lr = p.min_lr;
    c.batch_size = p.batch_size;
    return c;
}

nlohmann::ordered_json to_json(const TrainConfig& c) {
    nlohmann::ordered_json j;
    j["init_lr"] = c.init_lr;
    j["weight_decay"] = c.weight_decay;
    j["patience"] = c.patience;
    j["lr_factor"] = c.lr_factor;
    j["min_lr"] = c.min_lr;
    j["batch_size"] = c.batch_size;
    j["max_epochs"] = c.max_epochs;
    j["seed"] = c.seed;
    j["class_weighted"] = c.class_weighted;
    j["record_time"] = c.record_time;
    j["grid_lr"] = c.grid_lr;
    j["grid_wd"] = c.grid_wd;
    return j;
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
    static const std::set<std::string> known = {"init_lr", "weight_decay", "patience", "lr_factor",
                                                "min_lr", "batch_size", "max_epochs", "seed",
                                                "class_weighted", "record_time", "grid_lr", "grid_wd"};
    if (!j.is_object()) throw ConfigError("train config must be an object");
    for (const auto& [key, value] : j.items())
        if (!known.count(key)) throw ConfigError("unknown key '" + key + "' in train config");
    TrainConfig c;
    try {
        if (j.contains("init_lr")) c.init_lr = j.at("init_lr").get<double>();
        if (j.contains("weight_decay")) c.weight_decay = j.at("weight_decay").get<double>();
        if (j.contains("patience")) c.patience = j.at("patience").get<std::size_t>();
        if (j.contains("lr_factor")) c.lr_factor = j.at("lr_factor").get<double>();
        if (j.contains("min_lr")) c.min_lr = j.at("min_lr").get<double>();
        if (j.contains("batch_size")) c.batch_size = j.at("batch_size").get<std::size_t>();
        if (j.contains("max_epochs")) c.max_epochs = j.at("max_epochs").get<std::size_t>();
        if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("class_weighted")) c.class_weighted = j.at("class_weighted").get<bool>();
        if (j.contains("record_time")) c.record_time = j.at("record_time").get<bool>();
        if (j.contains("grid_lr")) c.grid_lr = j.at("grid_lr").get<std::vector<double>>();
        if (j.contains("grid_wd")) c.grid_wd = j.at("grid_wd").get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("train config: ") + e.what());
    }
    return c;
}

BatchTargets batch_targets(const std::vector<const Graph*>& graphs, TaskKind task) {
    BatchTargets t;
    for (std::size_t i = 0; i < graphs.size(); ++i) {
        const Graph& g = *graphs[i];
        switch (task) {
            case TaskKind::node_class:
                if (g.node_labels.size() != g.n_nodes) throw SchemaError("graph " + std::to_string(i) + " lacks node labels");
                t.labels.insert(t.labels.end(), g.node_labels.begin(), g.node_labels.end());
                break;
            case TaskKind::edge_class:
                if (g.edge_labels.size() != g.n_edges()) throw SchemaError("graph " + std::to_string(i) + " lacks edge labels");
                t.labels.insert(t.labels.end(), g.edge_labels.begin(), g.edge_labels.end());
                break;
            case TaskKind::graph_class:
                if (g.graph_label < 0) throw SchemaError("graph " + std::to_string(i) + " lacks a graph label");
                t.labels.push_back(g.graph_label);
                break;
            case TaskKind::graph_regress: t.values.push_back(g.graph_target); break;
        }
    }
    return t;
}

template <typename T>
Var<T> batch_loss(Tape<T>& tape, Model<T>& model, const std::vector<const Graph*>& graphs, bool class_weighted,
                  Tensor<T>* out) {
    const TaskKind task = model.config().task;
    GraphBatch batch = batch_graphs(graphs);
    BatchTargets targets = batch_targets(graphs, task);
    Var<T> pred = model.forward(tape, batch);
    if (out) *out = pred.value();
    if (task == TaskKind::graph_regress) return mae_loss(pred, targets.values);
    std::vector<double> weights;
    if (class_weighted) weights = inverse_frequency_weights(targets.labels, model.config().n_out);
    return cross_entropy(pred, targets.labels, weights);
}

template <typename T>
EvalResult evaluate(Model<T>& model, const std::vector<Graph>& graphs, std::size_t batch_size) {
    if (graphs.empty()) throw std::invalid_argument("evaluate: empty graph set");
    if (batch_size == 0) throw std::invalid_argument("evaluate: batch_size must be positive");
    const TaskKind task = model.config().task;
    model.set_bn_mode(BnMode::eval);
    std::vector<std::size_t> order(graphs.size());
    std::iota(order.begin(), order.end(), 0);
    MetricAccumulator acc(task);
    double loss_sum = 0;
    for (const auto& b : make_batches(graphs, order, batch_size)) {
        Tape<T> tape;
        Tensor<T> pred;
        const double loss = static_cast<double>(batch_loss(tape, model, b, false, &pred).value()[0]);
        BatchTargets targets = batch_targets(b, task);
        const std::size_t before = acc.items();
        if (task == TaskKind::graph_regress) {
            acc.add_regression(std::vector<double>(pred.data().begin(), pred.data().end()), targets.values);
        } else {
            acc.add_classes(argmax_rows(pred), targets.labels);
        }
        loss_sum += loss * static_cast<double>(acc.items() - before);
    }
    EvalResult r;
    r.items = acc.items();
    r.loss = r.items == 0 ? 0.0 : loss_sum / static_cast<double>(r.items);
    r.metric = acc.value();
    r.metric_name = metric_name(task);
    return r;
}

template <typename T>
TrainResult<T> train(Model<T>& model, const DatasetSplit& split, const TrainConfig& cfg) {
    validate(cfg);
    if (split.train.empty()) throw std::invalid_argument("train: empty training split");
    if (split.val.empty()) throw std::invalid_argument("train: empty validation split");
    const TaskKind task = model.config().task;
    if (task != split.task) {
        throw ConfigError("model task " + to_string(task) + " does not match dataset task " + to_string(split.task));
    }
    Rng rng(cfg.seed);
    Adam<T> adam(model.parameters());
    const PlateauConfig plateau{cfg.lr_factor, cfg.patience, cfg.min_lr};
    SchedulerState sched;
    sched.lr = cfg.init_lr;

    TrainResult<T> result;
    result.best_val_loss = std::numeric_limits<double>::infinity();
    result.stop_reason = "max_epochs";
    std::vector<std::size_t> order(split.train.size());
    std::iota(order.begin(), order.end(), 0);

    for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        const auto start = std::chrono::steady_clock::now();
        const double lr = sched.lr;
        rng.shuffle(order.begin(), order.end());
        model.set_bn_mode(BnMode::train);
        double loss_sum = 0;
        std::size_t items = 0;
        for (const auto& b : make_batches(split.train, order, cfg.batch_size)) {
            Tape<T> tape;
            Var<T> loss = batch_loss(tape, model, b, cfg.class_weighted);
            const double l = static_cast<double>(loss.value()[0]);
            if (!std::isfinite(l)) throw TrainingDivergedError(epoch, "non-finite training loss");
            adam.zero_grad();
            tape.backward(loss);
            try {
                adam.step(lr, cfg.weight_decay);
            } catch (const NonFiniteError& e) {
                throw TrainingDivergedError(epoch, e.what());
            }
            const std::size_t n = batch_targets(b, task).labels.size() + batch_targets(b, task).values.size();
            loss_sum += l * static_cast<double>(n);
            items += n;
        }
        EvalResult val = evaluate(model, split.val, cfg.batch_size);
        if (!std::isfinite(val.loss)) throw TrainingDivergedError(epoch, "non-finite validation loss");

        MetricsRecord rec;
        rec.epoch = epoch;
        rec.train_loss = items == 0 ? 0.0 : loss_sum / static_cast<double>(items);
        rec.val_loss = val.loss;
        rec.metric = val.metric;
        rec.lr = lr;
        if (cfg.record_time) {
            rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        }
        result.history.push_back(rec);

        if (val.loss < result.best_val_loss) {
            result.best_val_loss = val.loss;
            result.best_epoch = epoch;
            result.best = model.snapshot();
        }
        if (plateau_step(sched, plateau, val.loss).stop) {
            result.stop_reason = "min_lr";
            break;
        }
    }
    model.restore(result.best);
    return result;
}

std::string history_csv(const std::vector<MetricsRecord>& history) {
    std::string out = "epoch,train_loss,val_loss,metric,lr,seconds\n";
    for (const MetricsRecord& r : history) {
        out += std::to_string(r.epoch) + "," + format_double(r.train_loss) + "," + format_double(r.val_loss) + "," +
               format_double(r.metric) + "," + format_double(r.lr) + "," + format_double(r.seconds) + "\n";
    }
    return out;
}

std::string history_jsonl(const std::vector<MetricsRecord>& history) {
    std::string out;
    for (const MetricsRecord& r : history) {
        nlohmann::ordered_json j;
        j["epoch"] = r.epoch;
        j["train_loss"] = r.train_loss;
        j["val_loss"] = r.val_loss;
        j["metric"] = r.metric;
        j["lr"] = r.lr;
        j["seconds"] = r.seconds;
        out += j.dump() + "\n";
    }
    return out;
}

void write_history_csv(const std::filesystem::path& path, const std::vector<MetricsRecord>& history) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << history_csv(history);
}

void write_history_jsonl(const std::filesystem::path& path, const std::vector<MetricsRecord>& history) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << history_jsonl(history);
}

#define FOG_INSTANTIATE_TRAIN(T)                                                                                 \
    template Var<T> batch_loss(Tape<T>&, Model<T>&, const std::vector<const Graph*>&, bool, Tensor<T>*);        \
    template EvalResult evaluate(Model<T>&, const std::vector<Graph>&, std::size_t);                             \
    template TrainResult<T> train(Model<T>&, const DatasetSplit&, const TrainConfig&);

FOG_INSTANTIATE_TRAIN(float)
FOG_INSTANTIATE_TRAIN(double)

}  // namespace fog
