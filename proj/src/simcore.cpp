#include "cimsim/simcore.hpp"

#include <algorithm>
#include <cmath>

namespace cimsim {

namespace {

std::uint64_t ceil_cycles(double x)
{
    return static_cast<std::uint64_t>(std::ceil(x));
}

std::uint64_t bus_cycles(std::uint64_t bytes, std::uint32_t width_bits, std::uint32_t cycles_per_beat)
{
    return ceil_div(bytes * 8, width_bits) * cycles_per_beat;
}

std::uint64_t dram_cycles(std::uint64_t bytes, const TechCalibration& cal)
{
    const std::uint64_t stream = bytes == 0 ? 0 : ceil_cycles(double(bytes) / cal.dram_bytes_per_cycle());
    return stream + cal.dram_fixed_cycles();
}

// Average hop counts from the global buffer across the cluster grid and
// across the (active plus spare) tile grid of one cluster.
double cluster_hops(const HwConfig& h)
{
    return (h.c_v + h.c_h) / 2.0;
}

double tile_hops(const HwConfig& h)
{
    return (double(h.t_v_act) * std::max(h.m_mult(), 1u) + h.t_h_act) / 2.0;
}

std::uint64_t writeback_cycles(std::uint64_t bytes, const TechCalibration& cal, const HwConfig& h)
{
    if (bytes == 0) return 0;
    return std::max(dram_cycles(bytes, cal), bus_cycles(bytes, h.bus_inter_cluster, cal.bus.cycles_per_beat));
}

double writeback_energy_pj(std::uint64_t bytes, const TechCalibration& cal, const HwConfig& h)
{
    const double b = double(bytes);
    return b * (cal.dram.energy_pj_per_byte + cal.global_buffer.read_pj_per_byte) +
           b * 8.0 * cal.bus.energy_pj_per_bit * cluster_hops(h);
}

} // namespace

std::uint64_t partition_compute_cycles(const Partition& p, const TechCalibration& cal, const HwConfig& h)
{
    const std::uint64_t per_gemv = static_cast<std::uint64_t>(input_bits(h.precision)) * cal.pe.cycles_per_input_bit +
                                   std::uint64_t{p.tree_levels()} * cal.adder_tree.cycles_per_level;
    std::uint64_t cycles = std::uint64_t{p.reuse} * p.passes * per_gemv;
    for (const auto& a : p.aux) {
        cycles += ceil_cycles(double(a.elements) * cal.unit(a.unit).cycles_per_element / p.aux_units);
    }
    if (p.store == ResultStore::cluster_buffer) cycles += cal.cluster_buffer.cycles_per_access;
    if (p.store == ResultStore::global_buffer) cycles += cal.global_buffer.cycles_per_access;
    return cycles;
}

std::uint64_t partition_transfer_cycles(const Partition& p, const TechCalibration& cal, const HwConfig& h)
{
    const std::uint32_t beat = cal.bus.cycles_per_beat;
    const std::uint64_t per_cluster = ceil_div(p.dram_bytes, std::max(p.clusters_spanned, 1u));
    const std::uint64_t per_tile = ceil_div(p.dram_bytes, std::max<std::uint64_t>(p.tiles_spanned, 1));
    return std::max({dram_cycles(p.dram_bytes, cal),
                     bus_cycles(p.dram_bytes, h.bus_inter_cluster, beat),
                     bus_cycles(per_cluster, h.bus_inter_tile, beat),
                     bus_cycles(per_tile, h.bus_intra_tile, beat)});
}

double partition_energy_pj(const Partition& p, const TechCalibration& cal, const HwConfig& h)
{
    const double bytes = double(p.dram_bytes);
    double e = 0;
    // Only real MACs are charged; padded macro rows and columns are gated.
    e += double(p.macs()) * cal.pe.energy_pj_per_mac * input_bits(h.precision) / 8.0;
    e += bytes * cal.pe.weight_write_energy_pj_per_byte;
    e += double(p.adds) * cal.adder_tree.energy_pj_per_add;
    e += double(p.accumulations) * cal.accumulator.energy_pj_per_acc;
    e += double(packed_bytes(p.input_elems, h.precision)) * cal.cluster_buffer.read_pj_per_byte;
    e += double(packed_bytes(p.output_elems, h.precision)) * cal.cluster_buffer.write_pj_per_byte;
    e += bytes * (cal.global_buffer.write_pj_per_byte + cal.global_buffer.read_pj_per_byte);
    e += bytes * cal.dram.energy_pj_per_byte;
    e += bytes * 8.0 * cal.bus.energy_pj_per_bit * (cluster_hops(h) + tile_hops(h) + 1.0);
    for (const auto& a : p.aux) e += double(a.elements) * cal.unit(a.unit).energy_pj_per_element;
    return e;
}

PlanCost price_plan(StagePlan& plan, const TechCalibration& cal, const HwConfig& h)
{
    PlanCost cost;
    for (auto& p : plan.partitions) {
        p.compute_cycles = partition_compute_cycles(p, cal, h);
        p.transfer_cycles = partition_transfer_cycles(p, cal, h);
        cost.energy_pj += partition_energy_pj(p, cal, h);
        cost.dram_bytes += p.dram_bytes;
    }
    plan.writeback_cycles = writeback_cycles(plan.writeback_bytes, cal, h);
    cost.energy_pj += writeback_energy_pj(plan.writeback_bytes, cal, h);
    cost.dram_bytes += plan.writeback_bytes;
    cost.cycles = pipeline_latency(plan) + plan.writeback_cycles;
    return cost;
}

void attribute_plan_cost(const StagePlan& plan, const PlanCost& cost, std::uint64_t repeat,
                         std::array<StageMetrics, kStageCount>& per_stage)
{
    // Energy is accumulated one execution at a time, not multiplied, so the
    // sum is bit-identical to walking every token and layer explicitly.
    auto add = [repeat](StageMetrics& s, std::uint64_t cycles, double energy_pj, std::uint64_t bytes) {
        s.cycles += cycles * repeat;
        s.dram_bytes += bytes * repeat;
        for (std::uint64_t i = 0; i < repeat; ++i) s.energy_pj += energy_pj;
    };
    if (!plan.paired_stage) {
        add(per_stage[index_of(plan.stage)], cost.cycles, cost.energy_pj, cost.dram_bytes);
        return;
    }
    add(per_stage[index_of(plan.stage)], cost.cycles - cost.cycles / 2, cost.energy_pj / 2,
        cost.dram_bytes - cost.dram_bytes / 2);
    add(per_stage[index_of(*plan.paired_stage)], cost.cycles / 2, cost.energy_pj / 2, cost.dram_bytes / 2);
}

Metrics simulate_decode(const ModelConfig& m, const HwConfig& h, const TechCalibration& cal, const TokenSetting& t)
{
    if (const auto violations = validate(h, false); !violations.empty()) {
        std::string msg = "invalid hw config:";
        for (const auto& v : violations) msg += " " + v + ";";
        throw ConfigError(msg);
    }
    if (t.decode_tokens < 1) throw ConfigError("decode_tokens must be >= 1");

    Metrics out;
    out.decode_tokens = t.decode_tokens;
    const std::uint64_t layers = m.num_layers;

    // Weight stages are identical for every token and layer; attention grows with the sequence.
    auto plans = plan_decode_step(m, h, 1, t);
    for (auto& plan : plans) {
        if (plan.stage == Stage::attention_qk || plan.stage == Stage::attention_sv) continue;
        const auto cost = price_plan(plan, cal, h);
        attribute_plan_cost(plan, cost, layers * t.decode_tokens, out.per_stage);
    }
    for (std::uint32_t token = 1; token <= t.decode_tokens; ++token) {
        const auto ws = decode_stage_workloads(m, token, t, h.precision);
        const std::uint64_t seq = t.sequence_length(token);
        for (Stage s : {Stage::attention_qk, Stage::attention_sv}) {
            auto plan = plan_attention(ws[index_of(s)], h, m, seq);
            const auto cost = price_plan(plan, cal, h);
            attribute_plan_cost(plan, cost, layers, out.per_stage);
        }
    }

    double energy_pj = 0;
    for (const auto& s : out.per_stage) {
        out.total_cycles += s.cycles;
        energy_pj += s.energy_pj;
    }
    out.latency_s = double(out.total_cycles) / cal.clock_hz;
    out.energy_j = energy_pj * 1e-12;
    out.area_mm2 = chip_area(h, cal);
    out.throughput_tok_s = t.decode_tokens / out.latency_s;
    out.efficiency_tok_j = t.decode_tokens / out.energy_j;
    return out;
}

double roofline_bound(const ModelConfig& m, const HwConfig& h, const TechCalibration& cal, const TokenSetting& t)
{
    double bytes = 0;
    for (std::uint32_t token = 1; token <= t.decode_tokens; ++token) {
        std::uint64_t step = 0;
        for (const auto& w : decode_stage_workloads(m, token, t, h.precision)) {
            step += w.dram_bytes_in + w.dram_bytes_out;
        }
        bytes += double(step) * m.num_layers;
    }
    return bytes / cal.dram.bandwidth_bytes_per_s;
}

nlohmann::json to_json(const Metrics& m)
{
    nlohmann::json stages = nlohmann::json::array();
    for (Stage s : kAllStages) {
        const auto& x = m.stage(s);
        stages.push_back({{"stage", std::string(to_string(s))},
                          {"cycles", x.cycles},
                          {"energy_pj", x.energy_pj},
                          {"dram_bytes", x.dram_bytes}});
    }
    return {
        {"latency_s", m.latency_s},
        {"energy_j", m.energy_j},
        {"area_mm2", m.area_mm2},
        {"total_cycles", m.total_cycles},
        {"decode_tokens", m.decode_tokens},
        {"throughput_tok_s", m.throughput_tok_s},
        {"efficiency_tok_j", m.efficiency_tok_j},
        {"per_stage", stages},
    };
}

} // namespace cimsim
