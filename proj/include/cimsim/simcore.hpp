#pragma once

#include <array>
#include <cstdint>

#include <json.hpp>

#include "cimsim/arch.hpp"
#include "cimsim/mapper.hpp"
#include "cimsim/workload.hpp"

namespace cimsim {

struct PlanCost {
    std::uint64_t cycles = 0;
    double energy_pj = 0;
    std::uint64_t dram_bytes = 0;
};

/// Per-partition cycle counts under a calibration. Pure; used by price_plan.
std::uint64_t partition_compute_cycles(const Partition& p, const TechCalibration& cal, const HwConfig& h);
std::uint64_t partition_transfer_cycles(const Partition& p, const TechCalibration& cal, const HwConfig& h);
double partition_energy_pj(const Partition& p, const TechCalibration& cal, const HwConfig& h);

/// Fills each partition's compute/transfer cycles and the write-back cycles
/// of `plan`, then returns the stage's latency, energy and DRAM traffic.
PlanCost price_plan(StagePlan& plan, const TechCalibration& cal, const HwConfig& h);

struct StageMetrics {
    std::uint64_t cycles = 0;
    double energy_pj = 0;
    std::uint64_t dram_bytes = 0;
};

struct Metrics {
    double latency_s = 0;
    double energy_j = 0;
    double area_mm2 = 0;
    std::uint64_t total_cycles = 0;
    std::uint32_t decode_tokens = 0;
    std::array<StageMetrics, kStageCount> per_stage{};
    double throughput_tok_s = 0;
    double efficiency_tok_j = 0;

    const StageMetrics& stage(Stage s) const { return per_stage[index_of(s)]; }
};

/// Latency, energy and area of generating t.decode_tokens tokens. Throws
/// ConfigError when h fails structural validation.
Metrics simulate_decode(const ModelConfig& m, const HwConfig& h, const TechCalibration& cal, const TokenSetting& t);

/// Total DRAM traffic of the run divided by DRAM bandwidth, in seconds.
double roofline_bound(const ModelConfig& m, const HwConfig& h, const TechCalibration& cal, const TokenSetting& t);

/// Attributes a priced plan's cost to the stage(s) it covers. A fused plan
/// splits its cycles, energy and bytes evenly between its two stages.
void attribute_plan_cost(const StagePlan& plan, const PlanCost& cost, std::uint64_t repeat,
                         std::array<StageMetrics, kStageCount>& per_stage);

nlohmann::json to_json(const Metrics& m);

} // namespace cimsim
