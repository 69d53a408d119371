#include "cimsim/workload.hpp"

#include <array>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace cimsim {

namespace {

constexpr std::array<const char*, 9> kModelKeys = {
    "name", "num_layers", "d_model", "num_heads", "num_kv_heads",
    "head_dim", "d_ff", "activation", "norm",
};

std::uint32_t read_count(const nlohmann::json& j, const char* key)
{
    const auto& v = j.at(key);
    if (!v.is_number_integer()) {
        throw ConfigError(std::string("schema violation: '") + key + "' must be an integer");
    }
    const auto n = v.get<std::int64_t>();
    if (n < 1 || n > std::int64_t{1} << 31) {
        throw ConfigError(std::string("schema violation: '") + key + "' must be >= 1");
    }
    return static_cast<std::uint32_t>(n);
}

std::string read_string(const nlohmann::json& j, const char* key)
{
    const auto& v = j.at(key);
    if (!v.is_string()) {
        throw ConfigError(std::string("schema violation: '") + key + "' must be a string");
    }
    return v.get<std::string>();
}

} // namespace

ModelConfig parse_model_config(const nlohmann::json& j)
{
    if (!j.is_object()) throw ConfigError("schema violation: model config must be a JSON object");
    for (const auto* key : kModelKeys) {
        if (!j.contains(key)) throw ConfigError(std::string("schema violation: missing key '") + key + "'");
    }
    for (const auto& [key, _] : j.items()) {
        bool known = false;
        for (const auto* k : kModelKeys) known = known || key == k;
        if (!known) throw ConfigError("schema violation: unknown key '" + key + "'");
    }

    ModelConfig m;
    m.name = read_string(j, "name");
    m.num_layers = read_count(j, "num_layers");
    m.d_model = read_count(j, "d_model");
    m.num_heads = read_count(j, "num_heads");
    m.num_kv_heads = read_count(j, "num_kv_heads");
    m.head_dim = read_count(j, "head_dim");
    m.d_ff = read_count(j, "d_ff");

    const auto act = read_string(j, "activation");
    if (act == "silu") m.activation = Activation::silu;
    else if (act == "gelu") m.activation = Activation::gelu;
    else throw ConfigError("schema violation: 'activation' must be silu or gelu");

    const auto norm = read_string(j, "norm");
    if (norm == "rmsnorm") m.norm = NormKind::rmsnorm;
    else if (norm == "layernorm") m.norm = NormKind::layernorm;
    else throw ConfigError("schema violation: 'norm' must be rmsnorm or layernorm");

    if (m.num_heads % m.num_kv_heads != 0) {
        throw ConfigError("GQA divisibility: num_heads (" + std::to_string(m.num_heads) +
                          ") is not a multiple of num_kv_heads (" +
                          std::to_string(m.num_kv_heads) + ")");
    }
    return m;
}

ModelConfig load_model_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw IoError("cannot open model config " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("parse error in " + path.string() + ": " + e.what());
    }
    return parse_model_config(j);
}

nlohmann::json to_json(const ModelConfig& m)
{
    return {
        {"name", m.name},
        {"num_layers", m.num_layers},
        {"d_model", m.d_model},
        {"num_heads", m.num_heads},
        {"num_kv_heads", m.num_kv_heads},
        {"head_dim", m.head_dim},
        {"d_ff", m.d_ff},
        {"activation", m.activation == Activation::silu ? "silu" : "gelu"},
        {"norm", m.norm == NormKind::rmsnorm ? "rmsnorm" : "layernorm"},
    };
}

std::vector<StageWorkload> decode_stage_workloads(const ModelConfig& m,
                                                  std::uint32_t token_index,
                                                  const TokenSetting& t,
                                                  Precision precision)
{
    if (token_index < 1 || token_index > t.decode_tokens) {
        throw std::out_of_range("token_index " + std::to_string(token_index) +
                                " outside [1, " + std::to_string(t.decode_tokens) + "]");
    }
    const std::uint64_t seq = t.sequence_length(token_index);
    const std::uint64_t d_model = m.d_model;
    const std::uint64_t d_ff = m.d_ff;
    const std::uint64_t q_width = m.q_width();
    const std::uint64_t kv_width = m.kv_width();
    const auto bytes = [precision](std::uint64_t elems) { return packed_bytes(elems, precision); };

    auto weights = [&](Stage s, std::uint64_t rows, std::uint64_t cols, std::vector<AuxOp> aux) {
        StageWorkload w;
        w.stage = s;
        w.gemv_rows = rows;
        w.gemv_cols = cols;
        w.aux_ops = std::move(aux);
        w.dram_bytes_in = bytes(rows * cols);
        return w;
    };

    std::vector<StageWorkload> out;
    out.reserve(kStageCount);

    // Pre-attention norm is charged to the Q projection, which consumes it first.
    out.push_back(weights(Stage::projection_q, d_model, q_width,
                          {{AuxUnit::norm, d_model}, {AuxUnit::quant, q_width}}));

    for (Stage s : {Stage::projection_k, Stage::projection_v}) {
        auto w = weights(s, d_model, kv_width,
                         {{AuxUnit::quant, kv_width}, {AuxUnit::transpose, kv_width}});
        w.dram_bytes_out = bytes(kv_width);
        out.push_back(std::move(w));
    }

    for (Stage s : {Stage::attention_qk, Stage::attention_sv}) {
        StageWorkload w;
        w.stage = s;
        w.gemv_rows = seq;
        w.gemv_cols = m.head_dim;
        w.instances = m.num_heads;
        w.weight_resident = false;
        w.dram_bytes_in = std::uint64_t{m.num_kv_heads} * bytes(seq * m.head_dim);
        if (s == Stage::attention_qk) w.aux_ops = {{AuxUnit::softmax, std::uint64_t{m.num_heads} * seq}};
        else w.aux_ops = {{AuxUnit::quant, q_width}};
        out.push_back(std::move(w));
    }

    // Residual additions share the element-wise unit.
    out.push_back(weights(Stage::linear, q_width, d_model,
                          {{AuxUnit::eltwise_mul, d_model}, {AuxUnit::norm, d_model}}));
    out.push_back(weights(Stage::ffn_up, d_model, d_ff, {}));
    out.push_back(weights(Stage::ffn_gate, d_model, d_ff,
                          {{AuxUnit::activation, d_ff}, {AuxUnit::eltwise_mul, d_ff}}));
    out.push_back(weights(Stage::ffn_down, d_ff, d_model, {{AuxUnit::eltwise_mul, d_model}}));
    return out;
}

std::uint64_t kv_cache_write_bytes(const ModelConfig& m, Precision precision)
{
    return 2 * std::uint64_t{m.num_layers} * packed_bytes(m.kv_width(), precision);
}

std::uint64_t weight_bytes_per_step(const ModelConfig& m, Precision precision)
{
    const std::uint64_t d_model = m.d_model;
    const std::uint64_t per_layer = packed_bytes(d_model * m.q_width(), precision) +
                                    2 * packed_bytes(d_model * m.kv_width(), precision) +
                                    packed_bytes(m.q_width() * d_model, precision) +
                                    2 * packed_bytes(d_model * m.d_ff, precision) +
                                    packed_bytes(std::uint64_t{m.d_ff} * d_model, precision);
    return per_layer * m.num_layers;
}

} // namespace cimsim
