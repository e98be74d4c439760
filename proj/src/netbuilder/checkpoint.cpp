#include "fog/netbuilder/checkpoint.hpp"

#include <fstream>

namespace fog {

namespace {

template <typename T>
nlohmann::ordered_json tensor_json(const Tensor<T>& t) {
    nlohmann::ordered_json j;
    j["shape"] = t.shape();
    j["data"] = std::vector<double>(t.data().begin(), t.data().end());
    return j;
}

template <typename T>
Tensor<T> tensor_from(const nlohmann::json& j, const Shape& expected, const std::string& what) {
    Shape shape = j.at("shape").get<Shape>();
    if (shape != expected) {
        throw CheckpointError(what + ": stored shape " + shape_to_string(shape) + " but the model needs " +
                              shape_to_string(expected));
    }
    std::vector<double> data = j.at("data").get<std::vector<double>>();
    return Tensor<double>(shape, std::move(data)).cast<T>();
}

}  // namespace

template <typename T>
nlohmann::ordered_json checkpoint_to_json(Model<T>& model, const nlohmann::ordered_json& meta) {
    nlohmann::ordered_json j;
    j["format"] = "fog-checkpoint";
    j["version"] = kCheckpointVersion;
    j["config"] = to_json(model.config());
    if (!meta.is_null()) j["meta"] = meta;
    nlohmann::ordered_json params = nlohmann::ordered_json::object();
    for (Parameter<T>* p : model.parameters()) params[p->name] = tensor_json(p->value);
    j["params"] = std::move(params);
    nlohmann::ordered_json running = nlohmann::ordered_json::object();
    for (BatchNormState<T>* bn : model.batchnorms()) {
        const std::string name = bn->gamma.name.substr(0, bn->gamma.name.rfind('.'));
        running[name] = {{"mean", tensor_json(bn->running_mean)}, {"var", tensor_json(bn->running_var)}};
    }
    j["running"] = std::move(running);
    return j;
}

template <typename T>
Model<T> model_from_checkpoint(const nlohmann::json& j) {
    try {
        if (j.at("format") != "fog-checkpoint") throw CheckpointError("not a checkpoint file");
        const int version = j.at("version").get<int>();
        if (version != kCheckpointVersion) {
            throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
        }
        Model<T> model(model_config_from_json(j.at("config")), 0);
        const auto& params = j.at("params");
        for (Parameter<T>* p : model.parameters()) {
            if (!params.contains(p->name)) throw CheckpointError("missing parameter " + p->name);
            p->value = tensor_from<T>(params.at(p->name), p->value.shape(), p->name);
        }
        if (params.size() != model.parameters().size()) throw CheckpointError("checkpoint has extra parameters");
        const auto& running = j.at("running");
        for (BatchNormState<T>* bn : model.batchnorms()) {
            const std::string name = bn->gamma.name.substr(0, bn->gamma.name.rfind('.'));
            if (!running.contains(name)) throw CheckpointError("missing running statistics for " + name);
            bn->running_mean = tensor_from<T>(running.at(name).at("mean"), bn->running_mean.shape(), name);
            bn->running_var = tensor_from<T>(running.at(name).at("var"), bn->running_var.shape(), name);
        }
        return model;
    } catch (const nlohmann::json::exception& e) {
        throw CheckpointError(std::string("malformed checkpoint: ") + e.what());
    }
}

template <typename T>
void save_checkpoint(Model<T>& model, const std::filesystem::path& path, const nlohmann::ordered_json& meta) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw CheckpointError("cannot write " + path.string());
    out << checkpoint_to_json(model, meta).dump() << '\n';
    if (!out) throw CheckpointError("write failed for " + path.string());
}

template <typename T>
Model<T> load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw CheckpointError(path.string() + ": " + e.what());
    }
    return model_from_checkpoint<T>(j);
}

#define FOG_INSTANTIATE_CHECKPOINT(T)                                                                   \
    template nlohmann::ordered_json checkpoint_to_json(Model<T>&, const nlohmann::ordered_json&);      \
    template Model<T> model_from_checkpoint(const nlohmann::json&);                                     \
    template void save_checkpoint(Model<T>&, const std::filesystem::path&, const nlohmann::ordered_json&); \
    template Model<T> load_checkpoint(const std::filesystem::path&);

FOG_INSTANTIATE_CHECKPOINT(float)
FOG_INSTANTIATE_CHECKPOINT(double)

}  // namespace fog
