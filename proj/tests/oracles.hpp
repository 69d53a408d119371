#pragma once

// Reference models used only by tests. They share the per-partition pricing
// primitives with the library but re-derive scheduling and aggregation
// independently: an event-driven DMA + compute simulation instead of the
// closed-form pipeline sum, and an explicit walk over every token, layer and
// stage instead of pricing weight stages once.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <queue>
#include <tuple>
#include <utility>
#include <vector>

#include "cimsim/mapper.hpp"
#include "cimsim/simcore.hpp"

namespace oracle {

struct Job {
    std::uint64_t transfer;
    std::uint64_t compute;
};

/// Discrete-event run of one DMA engine feeding one compute fabric through
/// `slots` partition buffers. A buffer is held from the start of its transfer
/// until its compute finishes. Returns the finish time of the last compute.
inline std::uint64_t event_pipeline(const std::vector<Job>& jobs, unsigned slots)
{
    enum Kind { dma_done, compute_done };
    struct Event {
        std::uint64_t time;
        Kind kind;
        std::size_t job;
        bool operator>(const Event& o) const { return std::tie(time, kind, job) > std::tie(o.time, o.kind, o.job); }
    };
    std::priority_queue<Event, std::vector<Event>, std::greater<>> q;

    std::size_t next_fetch = 0, next_compute = 0, loaded = 0;
    unsigned free_slots = slots;
    bool dma_busy = false, compute_busy = false;
    std::uint64_t now = 0, finish = 0;

    auto try_start = [&] {
        if (!dma_busy && free_slots > 0 && next_fetch < jobs.size()) {
            dma_busy = true;
            --free_slots;
            q.push({now + jobs[next_fetch].transfer, dma_done, next_fetch});
            ++next_fetch;
        }
        if (!compute_busy && next_compute < loaded) {
            compute_busy = true;
            q.push({now + jobs[next_compute].compute, compute_done, next_compute});
            ++next_compute;
        }
    };

    try_start();
    while (!q.empty()) {
        now = q.top().time;
        // Drain every event at this instant before starting new work.
        while (!q.empty() && q.top().time == now) {
            const Event e = q.top();
            q.pop();
            if (e.kind == dma_done) {
                dma_busy = false;
                ++loaded;
            } else {
                compute_busy = false;
                ++free_slots;
                finish = now;
            }
        }
        try_start();
    }
    return finish;
}

inline unsigned buffer_slots(const cimsim::StagePlan& plan)
{
    return plan.overlap == cimsim::Overlap::double_buffered ? 2 : 1;
}

inline std::uint64_t plan_pipeline(const cimsim::StagePlan& plan)
{
    std::vector<Job> jobs;
    for (const auto& p : plan.partitions) jobs.push_back({p.transfer_cycles, p.compute_cycles});
    return event_pipeline(jobs, buffer_slots(plan));
}

struct DecodeTotals {
    std::uint64_t cycles = 0;
    double energy_pj = 0;
    std::array<std::uint64_t, cimsim::kStageCount> stage_cycles{};
    std::array<double, cimsim::kStageCount> stage_energy_pj{};
};

/// DMA store of freshly produced K or V vectors: DRAM write stream or the
/// inter-cluster bus, whichever is slower.
inline std::uint64_t store_cycles(std::uint64_t bytes, const cimsim::TechCalibration& cal, const cimsim::HwConfig& h)
{
    if (bytes == 0) return 0;
    const double per_cycle = cal.dram.bandwidth_bytes_per_s / cal.clock_hz;
    const auto fixed = static_cast<std::uint64_t>(std::ceil(cal.dram.fixed_latency_ns * 1e-9 * cal.clock_hz));
    const auto dram = static_cast<std::uint64_t>(std::ceil(double(bytes) / per_cycle)) + fixed;
    const std::uint64_t bus = (bytes * 8 + h.bus_inter_cluster - 1) / h.bus_inter_cluster * cal.bus.cycles_per_beat;
    return std::max(dram, bus);
}

inline double store_energy_pj(std::uint64_t bytes, const cimsim::TechCalibration& cal, const cimsim::HwConfig& h)
{
    const double b = double(bytes);
    return b * (cal.dram.energy_pj_per_byte + cal.global_buffer.read_pj_per_byte) +
           b * 8.0 * cal.bus.energy_pj_per_bit * ((h.c_v + h.c_h) / 2.0);
}

/// Replans and reprices every stage of every layer of every generated token.
inline DecodeTotals full_decode(const cimsim::ModelConfig& m, const cimsim::HwConfig& h,
                                const cimsim::TechCalibration& cal, const cimsim::TokenSetting& t)
{
    using namespace cimsim;
    DecodeTotals out;
    for (std::uint32_t token = 1; token <= t.decode_tokens; ++token) {
        for (std::uint32_t layer = 0; layer < m.num_layers; ++layer) {
            for (auto& plan : plan_decode_step(m, h, token, t)) {
                double energy = 0;
                for (auto& p : plan.partitions) {
                    p.compute_cycles = partition_compute_cycles(p, cal, h);
                    p.transfer_cycles = partition_transfer_cycles(p, cal, h);
                    energy += partition_energy_pj(p, cal, h);
                }
                energy += store_energy_pj(plan.writeback_bytes, cal, h);
                // The store starts once the last compute has produced its vector.
                const std::uint64_t cycles = plan_pipeline(plan) + store_cycles(plan.writeback_bytes, cal, h);

                const std::size_t a = index_of(plan.stage);
                if (plan.paired_stage) {
                    const std::size_t b = index_of(*plan.paired_stage);
                    out.stage_cycles[a] += cycles - cycles / 2;
                    out.stage_cycles[b] += cycles / 2;
                    out.stage_energy_pj[a] += energy / 2;
                    out.stage_energy_pj[b] += energy / 2;
                } else {
                    out.stage_cycles[a] += cycles;
                    out.stage_energy_pj[a] += energy;
                }
            }
        }
    }
    for (std::size_t s = 0; s < kStageCount; ++s) {
        out.cycles += out.stage_cycles[s];
        out.energy_pj += out.stage_energy_pj[s];
    }
    return out;
}

} // namespace oracle
