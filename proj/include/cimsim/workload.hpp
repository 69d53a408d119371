#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "cimsim/types.hpp"

namespace cimsim {

enum class Activation { silu, gelu };
enum class NormKind { rmsnorm, layernorm };

/// Architecture of a decoder-only language model. head_dim is stored
/// explicitly; num_heads * head_dim need not equal d_model.
struct ModelConfig {
    std::string name;
    std::uint32_t num_layers = 1;
    std::uint32_t d_model = 1;
    std::uint32_t num_heads = 1;
    std::uint32_t num_kv_heads = 1;
    std::uint32_t head_dim = 1;
    std::uint32_t d_ff = 1;
    Activation activation = Activation::silu;
    NormKind norm = NormKind::rmsnorm;

    /// Query heads sharing one KV head.
    std::uint32_t group_size() const { return num_heads / num_kv_heads; }
    std::uint64_t q_width() const { return std::uint64_t{num_heads} * head_dim; }
    std::uint64_t kv_width() const { return std::uint64_t{num_kv_heads} * head_dim; }
};

/// Prompt and generation lengths for one decode run. Batch is always 1.
struct TokenSetting {
    std::uint32_t prefill_tokens = 128;
    std::uint32_t decode_tokens = 128;

    static constexpr std::uint32_t batch = 1;

    /// Sequence length attended to while generating token `token_index` (1-based).
    std::uint64_t sequence_length(std::uint32_t token_index) const
    {
        return std::uint64_t{prefill_tokens} + token_index;
    }
};

/// One GEMV-shaped stage of a single decode step of a single layer.
///
/// The stage performs `instances` independent GEMVs of shape
/// gemv_rows x gemv_cols. Weight stages have one instance covering all heads;
/// attention stages have one instance per query head, with the token axis on
/// rows and head_dim on columns.
struct StageWorkload {
    Stage stage = Stage::projection_q;
    std::uint64_t gemv_rows = 0;
    std::uint64_t gemv_cols = 0;
    std::uint64_t instances = 1;
    bool weight_resident = true;
    std::vector<AuxOp> aux_ops;
    std::uint64_t dram_bytes_in = 0;
    std::uint64_t dram_bytes_out = 0;

    std::uint64_t macs() const { return gemv_rows * gemv_cols * instances; }
};

ModelConfig parse_model_config(const nlohmann::json& j);
ModelConfig load_model_config(const std::filesystem::path& path);
nlohmann::json to_json(const ModelConfig& m);

/// Returns the nine stage workloads of one layer for decode step `token_index`.
/// Throws std::out_of_range unless 1 <= token_index <= t.decode_tokens.
std::vector<StageWorkload> decode_stage_workloads(const ModelConfig& m,
                                                  std::uint32_t token_index,
                                                  const TokenSetting& t,
                                                  Precision precision);

/// K and V bytes appended to the cache per generated token, over all layers.
std::uint64_t kv_cache_write_bytes(const ModelConfig& m, Precision precision);

/// Weight bytes streamed from DRAM for one decode step over all layers.
std::uint64_t weight_bytes_per_step(const ModelConfig& m, Precision precision);

} // namespace cimsim
