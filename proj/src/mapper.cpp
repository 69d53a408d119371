#include "cimsim/mapper.hpp"

#include <algorithm>
#include <stdexcept>

namespace cimsim {

namespace {

/// The set of active tiles one lane maps onto.
struct Fabric {
    std::uint64_t row_cap;
    std::uint64_t col_cap;
    std::uint32_t p_side;
    std::uint32_t macro_cols;
    // Tiles per cluster along each axis; a chip-wide fabric spans several clusters.
    std::uint32_t cluster_tile_rows;
    std::uint32_t cluster_tile_cols;
    bool chip_wide;
};

Fabric cluster_fabric(const HwConfig& h, std::uint32_t tile_cols)
{
    const auto cap = pe_tile_capacity(h);
    return {cap.rows * h.t_v_act, cap.cols * tile_cols, h.p_side,
            macro_weight_cols(h.precision), h.t_v_act, h.t_h_act, false};
}

Fabric chip_fabric(const HwConfig& h, std::uint32_t chip_tile_cols)
{
    const auto cap = pe_tile_capacity(h);
    return {cap.rows * h.t_v_act * h.c_v, cap.cols * chip_tile_cols, h.p_side,
            macro_weight_cols(h.precision), h.t_v_act, h.t_h_act, true};
}

struct FoldShape {
    std::uint32_t tile_levels = 0;
    std::uint32_t cluster_levels = 0;
    std::uint32_t chip_levels = 0;
    std::uint64_t tiles = 0;
    std::uint32_t clusters = 1;
};

/// Reduction depth and footprint of one fold: `red` reduction rows by `out`
/// output columns, both already within the fabric's capacity.
FoldShape fold_shape(const Fabric& f, std::uint64_t red, std::uint64_t out)
{
    FoldShape s;
    const std::uint64_t macro_rows = ceil_div(red, kMacroRows);
    s.tile_levels = ceil_log2(std::min<std::uint64_t>(macro_rows, f.p_side));
    const std::uint64_t tile_rows = ceil_div(macro_rows, f.p_side);
    const std::uint64_t tile_cols = ceil_div(out, std::uint64_t{f.macro_cols} * f.p_side);
    s.tiles = tile_rows * tile_cols;
    if (f.chip_wide) {
        s.cluster_levels = ceil_log2(std::min<std::uint64_t>(tile_rows, f.cluster_tile_rows));
        const std::uint64_t cluster_rows = ceil_div(tile_rows, f.cluster_tile_rows);
        s.chip_levels = ceil_log2(cluster_rows);
        s.clusters = static_cast<std::uint32_t>(cluster_rows * ceil_div(tile_cols, f.cluster_tile_cols));
    } else {
        s.cluster_levels = ceil_log2(tile_rows);
    }
    return s;
}

/// Splits a rows x cols weight slice (per lane) into fabric-sized partitions.
/// Row chunks vary fastest so vertical partials accumulate before the next
/// column chunk starts.
void tile_weights(std::vector<Partition>& out, std::uint64_t rows, std::uint64_t cols,
                  std::uint32_t lanes, const Fabric& f, Precision precision)
{
    for (std::uint64_t c0 = 0; c0 < cols; c0 += f.col_cap) {
        const std::uint64_t pc = std::min(f.col_cap, cols - c0);
        for (std::uint64_t r0 = 0; r0 < rows; r0 += f.row_cap) {
            const std::uint64_t pr = std::min(f.row_cap, rows - r0);
            const auto shape = fold_shape(f, pr, pc);
            Partition p;
            p.rows = pr;
            p.cols = pc;
            p.lanes = lanes;
            p.dram_bytes = lanes * packed_bytes(pr * pc, precision);
            p.tiles_spanned = shape.tiles * lanes;
            p.clusters_spanned = f.chip_wide ? shape.clusters * lanes : lanes;
            p.tile_tree_levels = shape.tile_levels;
            p.cluster_tree_levels = shape.cluster_levels;
            p.chip_tree_levels = shape.chip_levels;
            p.adds = lanes * pc * (ceil_div(pr, kMacroRows) - 1);
            p.accumulations = r0 > 0 ? lanes * pc : 0;
            p.input_elems = lanes * pr;
            p.output_elems = lanes * pc;
            out.push_back(std::move(p));
        }
    }
}

Overlap overlap_for(const HwConfig& h)
{
    return h.m_mult() >= 2 ? Overlap::double_buffered : Overlap::serialized;
}

void summarize(StagePlan& plan)
{
    ReductionSummary r;
    for (const auto& p : plan.partitions) {
        r.tile_tree_levels = std::max(r.tile_tree_levels, p.tile_tree_levels);
        r.cluster_tree_levels = std::max(r.cluster_tree_levels, p.cluster_tree_levels);
        r.chip_tree_levels = std::max(r.chip_tree_levels, p.chip_tree_levels);
        r.accumulator_ops += p.accumulations;
    }
    plan.reduction = r;
}

void finish_stage(StagePlan& plan, std::vector<AuxOp> aux, std::uint32_t units, ResultStore store)
{
    auto& last = plan.partitions.back();
    last.aux.insert(last.aux.end(), aux.begin(), aux.end());
    last.aux_units = units;
    last.store = store;
    summarize(plan);
}

void require_stage(const StageWorkload& w, std::initializer_list<Stage> allowed, const char* fn)
{
    for (Stage s : allowed) {
        if (w.stage == s) return;
    }
    throw std::invalid_argument(std::string(fn) + ": unexpected stage " + std::string(to_string(w.stage)));
}

StagePlan plan_chip_wide(const StageWorkload& w, const HwConfig& h)
{
    StagePlan plan;
    plan.stage = w.stage;
    plan.overlap = overlap_for(h);
    plan.parallel_clusters = h.clusters();
    plan.rounds = 1;
    tile_weights(plan.partitions, w.gemv_rows, w.gemv_cols, 1, chip_fabric(h, h.c_h * h.t_h_act), h.precision);
    finish_stage(plan, w.aux_ops, h.clusters(), ResultStore::global_buffer);
    return plan;
}

} // namespace

std::string_view to_string(Overlap o)
{
    return o == Overlap::double_buffered ? "double_buffered" : "serialized";
}

std::uint64_t StagePlan::total_elements() const
{
    std::uint64_t n = 0;
    for (const auto& p : partitions) n += p.elements();
    return n;
}

std::uint64_t StagePlan::total_macs() const
{
    std::uint64_t n = 0;
    for (const auto& p : partitions) n += p.macs();
    return n;
}

std::uint64_t StagePlan::total_dram_bytes() const
{
    std::uint64_t n = writeback_bytes;
    for (const auto& p : partitions) n += p.dram_bytes;
    return n;
}

StagePlan plan_projection(const StageWorkload& w, const HwConfig& h, const ModelConfig& m)
{
    require_stage(w, {Stage::projection_q, Stage::projection_k, Stage::projection_v}, "plan_projection");
    const std::uint32_t heads = w.stage == Stage::projection_q ? m.num_heads : m.num_kv_heads;
    if (w.gemv_cols != std::uint64_t{heads} * m.head_dim) {
        throw std::invalid_argument("plan_projection: workload width does not match head count");
    }

    StagePlan plan;
    plan.stage = w.stage;
    plan.overlap = overlap_for(h);
    plan.parallel_clusters = std::min(heads, h.clusters());
    plan.rounds = static_cast<std::uint32_t>(ceil_div(heads, plan.parallel_clusters));
    plan.writeback_bytes = w.dram_bytes_out;

    const Fabric f = cluster_fabric(h, h.t_h_act);
    for (std::uint32_t r = 0; r < plan.rounds; ++r) {
        const std::uint32_t lanes = std::min(plan.parallel_clusters, heads - r * plan.parallel_clusters);
        tile_weights(plan.partitions, w.gemv_rows, m.head_dim, lanes, f, h.precision);
    }
    // q stays on chip for attention; k and v leave through the write-back.
    const auto store = w.stage == Stage::projection_q ? ResultStore::cluster_buffer : ResultStore::none;
    finish_stage(plan, w.aux_ops, plan.parallel_clusters, store);
    return plan;
}

std::uint64_t attention_block_rows(const HwConfig& h)
{
    return pe_tile_capacity(h).rows * h.t_v_act;
}

StagePlan plan_attention(const StageWorkload& w, const HwConfig& h, const ModelConfig& m, std::uint64_t seq_len)
{
    require_stage(w, {Stage::attention_qk, Stage::attention_sv}, "plan_attention");
    if (seq_len < 1) throw std::invalid_argument("plan_attention: sequence length must be >= 1");
    if (w.gemv_rows != seq_len) throw std::invalid_argument("plan_attention: workload sequence length mismatch");

    const bool keys = w.stage == Stage::attention_qk;
    const std::uint32_t heads = m.num_kv_heads;
    const std::uint32_t group = m.group_size();
    const std::uint64_t d_h = m.head_dim;

    // Keys take the larger half of the active tile columns; a single column is time-shared.
    const std::uint32_t key_cols = h.t_h_act >= 2 ? (h.t_h_act + 1) / 2 : 1;
    const std::uint32_t value_cols = h.t_h_act >= 2 ? h.t_h_act / 2 : 1;
    const Fabric f = cluster_fabric(h, keys ? key_cols : value_cols);
    const std::uint64_t block = attention_block_rows(h);

    StagePlan plan;
    plan.stage = w.stage;
    plan.overlap = overlap_for(h);
    plan.parallel_clusters = std::min(heads, h.clusters());
    plan.rounds = static_cast<std::uint32_t>(ceil_div(heads, plan.parallel_clusters));

    for (std::uint32_t r = 0; r < plan.rounds; ++r) {
        const std::uint32_t lanes = std::min(plan.parallel_clusters, heads - r * plan.parallel_clusters);
        for (std::uint64_t s0 = 0; s0 < seq_len; s0 += block) {
            const std::uint64_t blk = std::min(block, seq_len - s0);
            // Scores reduce over head_dim with tokens as outputs; the value
            // product reduces over tokens with head_dim as outputs.
            const std::uint64_t red = keys ? d_h : blk;
            const std::uint64_t out = keys ? blk : d_h;
            const std::uint64_t row_folds = ceil_div(red, f.row_cap);
            const std::uint64_t col_folds = ceil_div(out, f.col_cap);
            const auto shape = fold_shape(f, std::min(red, f.row_cap), std::min(out, f.col_cap));
            const std::uint64_t gemvs = std::uint64_t{lanes} * group;

            Partition p;
            p.rows = blk;
            p.cols = d_h;
            p.lanes = lanes;
            p.reuse = group;
            p.passes = static_cast<std::uint32_t>(row_folds * col_folds);
            p.dram_bytes = lanes * packed_bytes(blk * d_h, h.precision);
            p.tiles_spanned = shape.tiles * lanes;
            p.clusters_spanned = lanes;
            p.tile_tree_levels = shape.tile_levels;
            p.cluster_tree_levels = shape.cluster_levels;
            p.adds = gemvs * out * (ceil_div(red, kMacroRows) - row_folds);
            p.accumulations = gemvs * out * (row_folds - 1);
            if (!keys && s0 > 0) p.accumulations += gemvs * out;
            p.input_elems = gemvs * red;
            p.output_elems = gemvs * out;
            if (keys) {
                p.aux = {{AuxUnit::softmax, gemvs * blk}};
                p.aux_units = lanes;
            }
            plan.partitions.push_back(std::move(p));
        }
    }

    if (keys) {
        plan.partitions.back().store = ResultStore::cluster_buffer;
        summarize(plan);
    } else {
        finish_stage(plan, w.aux_ops, plan.parallel_clusters, ResultStore::global_buffer);
    }
    return plan;
}

StagePlan plan_linear(const StageWorkload& w, const HwConfig& h, const ModelConfig&)
{
    require_stage(w, {Stage::linear}, "plan_linear");
    return plan_chip_wide(w, h);
}

StagePlan plan_ffn(const StageWorkload& up, const StageWorkload& gate, const HwConfig& h, const ModelConfig&)
{
    require_stage(up, {Stage::ffn_up}, "plan_ffn");
    require_stage(gate, {Stage::ffn_gate}, "plan_ffn");
    if (up.gemv_rows != gate.gemv_rows || up.gemv_cols != gate.gemv_cols) {
        throw std::invalid_argument("plan_ffn: up and gate shapes differ");
    }

    const std::uint32_t chip_cols = h.c_h * h.t_h_act;
    const bool time_shared = chip_cols < 2;
    const Fabric f = chip_fabric(h, time_shared ? chip_cols : chip_cols / 2);

    StagePlan plan;
    plan.stage = Stage::ffn_up;
    plan.paired_stage = Stage::ffn_gate;
    plan.overlap = overlap_for(h);
    plan.parallel_clusters = h.clusters();
    plan.rounds = 1;
    tile_weights(plan.partitions, up.gemv_rows, up.gemv_cols, 2, f, h.precision);
    for (auto& p : plan.partitions) {
        if (time_shared) p.passes = 2;
        p.clusters_spanned = std::min(p.clusters_spanned, h.clusters());
    }
    std::vector<AuxOp> aux = up.aux_ops;
    aux.insert(aux.end(), gate.aux_ops.begin(), gate.aux_ops.end());
    finish_stage(plan, std::move(aux), h.clusters(), ResultStore::global_buffer);
    return plan;
}

StagePlan plan_ffn_down(const StageWorkload& w, const HwConfig& h, const ModelConfig&)
{
    require_stage(w, {Stage::ffn_down}, "plan_ffn_down");
    return plan_chip_wide(w, h);
}

std::vector<StagePlan> plan_decode_step(const ModelConfig& m, const HwConfig& h,
                                        std::uint32_t token_index, const TokenSetting& t)
{
    const auto ws = decode_stage_workloads(m, token_index, t, h.precision);
    const std::uint64_t seq = t.sequence_length(token_index);
    auto at = [&ws](Stage s) -> const StageWorkload& { return ws[index_of(s)]; };

    std::vector<StagePlan> plans;
    plans.reserve(kStageCount - 1);
    plans.push_back(plan_projection(at(Stage::projection_q), h, m));
    plans.push_back(plan_projection(at(Stage::projection_k), h, m));
    plans.push_back(plan_projection(at(Stage::projection_v), h, m));
    plans.push_back(plan_attention(at(Stage::attention_qk), h, m, seq));
    plans.push_back(plan_attention(at(Stage::attention_sv), h, m, seq));
    plans.push_back(plan_linear(at(Stage::linear), h, m));
    plans.push_back(plan_ffn(at(Stage::ffn_up), at(Stage::ffn_gate), h, m));
    plans.push_back(plan_ffn_down(at(Stage::ffn_down), h, m));
    return plans;
}

std::uint64_t pipeline_latency(const StagePlan& plan)
{
    const auto& parts = plan.partitions;
    if (parts.empty()) throw std::invalid_argument("pipeline_latency: empty plan");

    std::uint64_t cycles = 0;
    if (plan.overlap == Overlap::serialized) {
        for (const auto& p : parts) cycles += p.transfer_cycles + p.compute_cycles;
        return cycles;
    }
    cycles = parts.front().transfer_cycles;
    for (std::size_t k = 0; k < parts.size(); ++k) {
        const std::uint64_t next = k + 1 < parts.size() ? parts[k + 1].transfer_cycles : 0;
        cycles += std::max(parts[k].compute_cycles, next);
    }
    return cycles;
}

nlohmann::json to_json(const Partition& p)
{
    nlohmann::json aux = nlohmann::json::array();
    for (const auto& a : p.aux) aux.push_back({{"unit", std::string(to_string(a.unit))}, {"elements", a.elements}});
    return {
        {"rows", p.rows},
        {"cols", p.cols},
        {"lanes", p.lanes},
        {"reuse", p.reuse},
        {"passes", p.passes},
        {"dram_bytes", p.dram_bytes},
        {"tree_levels", {p.tile_tree_levels, p.cluster_tree_levels, p.chip_tree_levels}},
        {"accumulations", p.accumulations},
        {"aux", aux},
        {"compute_cycles", p.compute_cycles},
        {"transfer_cycles", p.transfer_cycles},
    };
}

nlohmann::json to_json(const StagePlan& plan)
{
    nlohmann::json parts = nlohmann::json::array();
    for (const auto& p : plan.partitions) parts.push_back(to_json(p));
    nlohmann::json j = {
        {"stage", std::string(to_string(plan.stage))},
        {"overlap", std::string(to_string(plan.overlap))},
        {"parallel_clusters", plan.parallel_clusters},
        {"rounds", plan.rounds},
        {"reduction",
         {{"tile_tree_levels", plan.reduction.tile_tree_levels},
          {"cluster_tree_levels", plan.reduction.cluster_tree_levels},
          {"chip_tree_levels", plan.reduction.chip_tree_levels},
          {"accumulator_ops", plan.reduction.accumulator_ops}}},
        {"writeback_bytes", plan.writeback_bytes},
        {"writeback_cycles", plan.writeback_cycles},
        {"partitions", parts},
    };
    if (plan.paired_stage) j["paired_stage"] = std::string(to_string(*plan.paired_stage));
    return j;
}

} // namespace cimsim
