#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <json.hpp>

#include "cimsim/arch.hpp"
#include "cimsim/types.hpp"
#include "cimsim/workload.hpp"

namespace cimsim {

/// Whether the next partition can be preloaded into spare tiles while the
/// active tiles compute.
enum class Overlap { double_buffered, serialized };

std::string_view to_string(Overlap o);

/// Where a stage leaves its result once its last partition finishes.
enum class ResultStore { none, cluster_buffer, global_buffer };

/// One pipeline step: a data block streamed from DRAM onto the active tiles
/// and the computation performed on it.
///
/// `rows x cols` is the block shape seen by one lane. `lanes` identical blocks
/// are processed concurrently (one per cluster for head-parallel stages, one
/// per fabric half for the fused FFN up/gate stage). Each loaded block serves
/// `reuse` GEMVs, and each GEMV takes `passes` sequential sweeps of the fabric.
struct Partition {
    std::uint64_t rows = 0;
    std::uint64_t cols = 0;
    std::uint32_t lanes = 1;
    std::uint32_t reuse = 1;
    std::uint32_t passes = 1;
    std::uint64_t dram_bytes = 0;

    std::uint32_t clusters_spanned = 1;
    std::uint64_t tiles_spanned = 1;

    std::uint32_t tile_tree_levels = 0;
    std::uint32_t cluster_tree_levels = 0;
    std::uint32_t chip_tree_levels = 0;
    std::uint64_t adds = 0;
    std::uint64_t accumulations = 0;
    std::uint64_t input_elems = 0;
    std::uint64_t output_elems = 0;

    /// Functional-unit work serialized after this partition's GEMVs.
    std::vector<AuxOp> aux;
    std::uint32_t aux_units = 1;
    ResultStore store = ResultStore::none;

    // Filled in by price_plan.
    std::uint64_t compute_cycles = 0;
    std::uint64_t transfer_cycles = 0;

    std::uint64_t macs() const { return rows * cols * lanes * reuse; }
    std::uint64_t elements() const { return rows * cols * lanes; }
    std::uint32_t tree_levels() const { return tile_tree_levels + cluster_tree_levels + chip_tree_levels; }
};

struct ReductionSummary {
    std::uint32_t tile_tree_levels = 0;
    std::uint32_t cluster_tree_levels = 0;
    std::uint32_t chip_tree_levels = 0;
    std::uint64_t accumulator_ops = 0;
};

struct StagePlan {
    Stage stage = Stage::projection_q;
    /// Set when a second stage executes concurrently inside this plan (ffn_gate within ffn_up).
    std::optional<Stage> paired_stage;
    std::vector<Partition> partitions;
    Overlap overlap = Overlap::serialized;
    std::uint32_t parallel_clusters = 1;
    std::uint32_t rounds = 1;
    ReductionSummary reduction;
    /// Bytes written back to DRAM after the last partition (new K or V vectors).
    std::uint64_t writeback_bytes = 0;
    std::uint64_t writeback_cycles = 0;

    std::uint64_t total_elements() const;
    std::uint64_t total_macs() const;
    std::uint64_t total_dram_bytes() const;
};

StagePlan plan_projection(const StageWorkload& w, const HwConfig& h, const ModelConfig& m);
StagePlan plan_attention(const StageWorkload& w, const HwConfig& h, const ModelConfig& m, std::uint64_t seq_len);
StagePlan plan_linear(const StageWorkload& w, const HwConfig& h, const ModelConfig& m);
/// Up and gate projections run concurrently on the two halves of the PE fabric.
StagePlan plan_ffn(const StageWorkload& up, const StageWorkload& gate, const HwConfig& h, const ModelConfig& m);
/// Down projection, planned across the full chip like the output projection.
StagePlan plan_ffn_down(const StageWorkload& w, const HwConfig& h, const ModelConfig& m);

/// Rows of keys/values per streamed attention block.
std::uint64_t attention_block_rows(const HwConfig& h);

/// All plans of one decode step of one layer, in execution order. The fused
/// FFN up/gate plan covers both ffn_up and ffn_gate, so eight plans result.
std::vector<StagePlan> plan_decode_step(const ModelConfig& m, const HwConfig& h,
                                        std::uint32_t token_index, const TokenSetting& t);

/// Cycles to run a plan's partitions through the DMA/compute pipeline.
///
/// double_buffered: T1 + sum_k max(C_k, T_{k+1}) with T_{n+1} = 0.
/// serialized:      sum_k (T_k + C_k).
std::uint64_t pipeline_latency(const StagePlan& plan);

nlohmann::json to_json(const Partition& p);
nlohmann::json to_json(const StagePlan& plan);

} // namespace cimsim
