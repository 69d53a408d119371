#include <doctest.h>

#include <cmath>
#include <random>

#include "cimsim/simcore.hpp"
#include "oracles.hpp"
#include "test_paths.hpp"

using namespace cimsim;
using testing_paths::data;

namespace {

ModelConfig toy() { return load_model_config(data("toy/toy.json")); }
HwConfig tiny() { return load_hw_config(data("hw/tiny.json")); }
TechCalibration default_cal() { return load_calibration(data("calibration/default-65nm.json")); }

Partition macro_gemv()
{
    Partition p;
    p.rows = 16;
    p.cols = 8;
    p.lanes = 1;
    p.input_elems = 16;
    p.output_elems = 8;
    return p;
}

} // namespace

TEST_CASE("bit-serial compute cycles")
{
    const auto cal = unit_calibration();
    auto h = tiny();
    h.precision = Precision::int8;
    auto p = macro_gemv();
    CHECK(partition_compute_cycles(p, cal, h) == 8);
    h.precision = Precision::int4;
    CHECK(partition_compute_cycles(p, cal, h) == 4);

    p.tile_tree_levels = 1;
    p.cluster_tree_levels = 2;
    p.aux = {{AuxUnit::quant, 6}};
    p.aux_units = 2;
    p.store = ResultStore::cluster_buffer;
    CHECK(partition_compute_cycles(p, cal, h) == 4 + 3 + 3 + 1);
    p.reuse = 3;
    p.passes = 2;
    CHECK(partition_compute_cycles(p, cal, h) == 6 * (4 + 3) + 3 + 1);
}

TEST_CASE("transfer cycles: fixed latency, DRAM stream and bus terms")
{
    auto cal = unit_calibration();
    const auto h = tiny();
    Partition p = macro_gemv();
    p.dram_bytes = 0;
    CHECK(partition_transfer_cycles(p, cal, h) == cal.dram_fixed_cycles());
    const auto d = default_cal();
    CHECK(partition_transfer_cycles(p, d, h) == 20);

    // 1 byte/cycle DRAM dominates a wide bus.
    p.dram_bytes = 1000;
    p.clusters_spanned = 1;
    p.tiles_spanned = 1;
    CHECK(partition_transfer_cycles(p, cal, h) == 1001);

    // A fast DRAM exposes the narrowest bus level.
    cal.dram.bandwidth_bytes_per_s = 1e6;
    auto narrow = h;
    narrow.bus_intra_tile = 64;
    CHECK(partition_transfer_cycles(p, cal, narrow) == 1000 * 8 / 64);
    p.tiles_spanned = 4;
    CHECK(partition_transfer_cycles(p, cal, narrow) == 32);
}

TEST_CASE("energy charges only real MACs, scaled by input bits")
{
    auto cal = unit_calibration();
    auto h = tiny();
    Partition p = macro_gemv();
    p.rows = 3;
    p.cols = 5;
    p.input_elems = 0;
    p.output_elems = 0;
    h.precision = Precision::int8;
    const double e8 = partition_energy_pj(p, cal, h);
    h.precision = Precision::int4;
    const double e4 = partition_energy_pj(p, cal, h);
    CHECK(e8 == doctest::Approx(15.0));
    CHECK(e4 == doctest::Approx(7.5));
}

TEST_CASE("toy model on tiny hw with unit calibration matches the event-driven oracle")
{
    const auto m = toy();
    const auto h = tiny();
    const auto cal = unit_calibration();
    const TokenSetting t{0, 1};
    const auto r = simulate_decode(m, h, cal, t);
    const auto o = oracle::full_decode(m, h, cal, t);
    CHECK(r.total_cycles == o.cycles);
    CHECK(r.energy_j == o.energy_pj * 1e-12);
    for (Stage s : kAllStages) {
        CHECK(r.stage(s).cycles == o.stage_cycles[index_of(s)]);
        CHECK(r.stage(s).energy_pj == o.stage_energy_pj[index_of(s)]);
    }
    // Recorded from the oracle; any change to the cost model must update it deliberately.
    CHECK(r.total_cycles == 10912);
    CHECK(r.latency_s == 10912.0);
}

TEST_CASE("oracle equivalence on small configs with real calibration")
{
    const auto m = toy();
    const auto cal = default_cal();
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 8; ++trial) {
        HwConfig h;
        h.c_v = 1;
        h.c_h = 1 + rng() % 2;
        h.t_v_act = 1 + rng() % 3;
        h.t_h_act = 1 + rng() % 3;
        h.t_total = h.active_tiles() * (1 + rng() % 2);
        h.p_side = 1 + rng() % 3;
        h.precision = rng() % 2 ? Precision::int4 : Precision::int8;
        const TokenSetting t{static_cast<std::uint32_t>(rng() % 50), static_cast<std::uint32_t>(1 + rng() % 6)};
        const auto r = simulate_decode(m, h, cal, t);
        const auto o = oracle::full_decode(m, h, cal, t);
        CHECK(r.total_cycles == o.cycles);
        CHECK(r.energy_j == o.energy_pj * 1e-12);
    }
}

TEST_CASE("the second token costs at least as much as the first")
{
    const auto m = toy();
    const auto cal = default_cal();
    const auto one = simulate_decode(m, tiny(), cal, {16, 1});
    const auto two = simulate_decode(m, tiny(), cal, {16, 2});
    CHECK(two.latency_s > one.latency_s);
    CHECK(two.total_cycles - one.total_cycles >= one.total_cycles);
    const auto attention = one.stage(Stage::attention_qk).cycles + one.stage(Stage::attention_sv).cycles;
    CHECK(two.total_cycles - one.total_cycles >= attention);
}

TEST_CASE("metrics invariants and determinism")
{
    const auto m = load_model_config(data("models/qwen3-0.6b.json"));
    const auto cal = default_cal();
    const auto h = reference_hw();
    const TokenSetting t{32, 16};
    const auto a = simulate_decode(m, h, cal, t);
    const auto b = simulate_decode(m, h, cal, t);
    CHECK(to_json(a).dump() == to_json(b).dump());

    std::uint64_t cycles = 0;
    double energy = 0;
    for (Stage s : kAllStages) {
        CHECK(a.stage(s).cycles > 0);
        cycles += a.stage(s).cycles;
        energy += a.stage(s).energy_pj;
    }
    CHECK(cycles == a.total_cycles);
    CHECK(a.latency_s == double(a.total_cycles) / cal.clock_hz);
    CHECK(a.energy_j == doctest::Approx(energy * 1e-12).epsilon(1e-12));
    CHECK(a.throughput_tok_s == 16 / a.latency_s);
    CHECK(a.efficiency_tok_j == 16 / a.energy_j);
    CHECK(a.area_mm2 == chip_area(h, cal));
    CHECK(to_json(a).at("per_stage").size() == 9);
}

TEST_CASE("roofline bound")
{
    const auto m = load_model_config(data("models/tinyllama-1.1b.json"));
    auto cal = default_cal();
    const auto h = reference_hw();
    const TokenSetting t{64, 8};
    const double base = roofline_bound(m, h, cal, t);
    CHECK(simulate_decode(m, h, cal, t).latency_s >= base);
    cal.dram.bandwidth_bytes_per_s *= 2;
    CHECK(roofline_bound(m, h, cal, t) == base / 2);
}

TEST_CASE("more bandwidth never adds latency")
{
    const auto m = load_model_config(data("models/qwen2.5-0.5b.json"));
    const auto cal = default_cal();
    const TokenSetting t{32, 4};
    std::mt19937_64 rng(9);
    const std::uint32_t widths[] = {512, 1024, 2048, 4096};
    for (int trial = 0; trial < 12; ++trial) {
        HwConfig h;
        h.c_v = 1 + rng() % 3;
        h.c_h = 1 + rng() % 3;
        h.t_v_act = 2 + rng() % 3;
        h.t_h_act = 2 + rng() % 3;
        h.t_total = h.active_tiles() * (1 + rng() % 2);
        h.p_side = 2 + rng() % 3;
        h.bus_inter_cluster = 512;
        h.bus_inter_tile = 512;
        h.bus_intra_tile = 512;
        const auto base = simulate_decode(m, h, cal, t).latency_s;
        for (std::uint32_t HwConfig::*bus :
             {&HwConfig::bus_inter_cluster, &HwConfig::bus_inter_tile, &HwConfig::bus_intra_tile}) {
            auto wider = h;
            wider.*bus = widths[1 + rng() % 3];
            CHECK(simulate_decode(m, wider, cal, t).latency_s <= base);
        }
        auto faster = cal;
        faster.dram.bandwidth_bytes_per_s *= 1.5;
        CHECK(simulate_decode(m, h, faster, t).latency_s <= base);
    }
}

TEST_CASE("latency and energy are non-decreasing in tokens")
{
    const auto m = load_model_config(data("models/smollm2-1.7b.json"));
    const auto cal = default_cal();
    const auto h = reference_hw();
    Metrics prev = simulate_decode(m, h, cal, {0, 1});
    for (std::uint32_t d = 2; d <= 6; ++d) {
        const auto r = simulate_decode(m, h, cal, {0, d});
        CHECK(r.latency_s >= prev.latency_s);
        CHECK(r.energy_j >= prev.energy_j);
        prev = r;
    }
    prev = simulate_decode(m, h, cal, {0, 4});
    for (std::uint32_t p = 100; p <= 1000; p += 100) {
        const auto r = simulate_decode(m, h, cal, {p, 4});
        CHECK(r.latency_s >= prev.latency_s);
        CHECK(r.energy_j >= prev.energy_j);
        prev = r;
    }
}

TEST_CASE("invalid hardware is rejected before simulation")
{
    auto h = tiny();
    h.t_total = 5;
    CHECK_THROWS_AS(simulate_decode(toy(), h, unit_calibration(), {0, 1}), ConfigError);
    CHECK_THROWS_AS(simulate_decode(toy(), tiny(), unit_calibration(), {0, 0}), ConfigError);
}
