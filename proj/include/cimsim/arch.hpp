#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "cimsim/types.hpp"

namespace cimsim {

/// One hardware design point: a c_v x c_h grid of clusters, each holding
/// t_total tiles of which t_v_act x t_h_act are active at a time, each tile a
/// p_side x p_side array of 16x16 bit-serial CIM macros.
struct HwConfig {
    std::uint32_t c_v = 1;
    std::uint32_t c_h = 1;
    std::uint32_t t_v_act = 1;
    std::uint32_t t_h_act = 1;
    std::uint32_t t_total = 1;
    std::uint32_t p_side = 1;
    std::uint32_t bus_inter_cluster = 512;
    std::uint32_t bus_inter_tile = 512;
    std::uint32_t bus_intra_tile = 512;
    Precision precision = Precision::int8;

    std::uint32_t clusters() const { return c_v * c_h; }
    std::uint32_t active_tiles() const { return t_v_act * t_h_act; }
    /// Total-tile multiplier; meaningful only when t_total is a multiple of active_tiles().
    std::uint32_t m_mult() const { return active_tiles() == 0 ? 0 : t_total / active_tiles(); }
    std::uint32_t pes_per_tile() const { return p_side * p_side; }

    bool operator==(const HwConfig&) const = default;
};

/// Configuration selected for LLaMA3.2-3B INT8 at alpha = 0.5 in the reference evaluation.
HwConfig reference_hw();

HwConfig parse_hw_config(const nlohmann::json& j);
HwConfig load_hw_config(const std::filesystem::path& path);
/// Parses "c_v=2,c_h=3,..." (missing keys keep their defaults).
HwConfig parse_hw_inline(const std::string& spec);
nlohmann::json to_json(const HwConfig& h);

/// Returns every violated invariant (empty when valid). dse_mode additionally
/// enforces the design-space ranges.
std::vector<std::string> validate(const HwConfig& h, bool dse_mode);

/// Columns of weights one macro holds: 16 four-bit columns, two per INT8 weight.
constexpr std::uint32_t macro_weight_cols(Precision p) { return p == Precision::int4 ? 16 : 8; }
inline constexpr std::uint32_t kMacroRows = 16;

struct TileCapacity {
    std::uint64_t rows;
    std::uint64_t cols;

    bool operator==(const TileCapacity&) const = default;
};

TileCapacity pe_tile_capacity(const HwConfig& h);

struct UnitCost {
    double cycles_per_element = 1;
    double energy_pj_per_element = 1;
    double area_mm2 = 1;
};

struct BufferCost {
    double read_pj_per_byte = 1;
    double write_pj_per_byte = 1;
    std::uint32_t cycles_per_access = 1;
    double area_mm2 = 1;
};

/// Per-component latency, energy and area coefficients at one technology node.
struct TechCalibration {
    double tech_node_nm = 65;
    std::string provenance;
    double clock_hz = 1e9;

    struct {
        std::uint32_t cycles_per_input_bit = 1;
        double energy_pj_per_mac = 1;
        double area_mm2 = 1;
        double weight_write_energy_pj_per_byte = 1;
    } pe;

    struct {
        std::uint32_t cycles_per_level = 1;
        double energy_pj_per_add = 1;
        double area_mm2_per_input = 1;
    } adder_tree;

    struct {
        double energy_pj_per_acc = 1;
        double area_mm2 = 1;
    } accumulator;

    BufferCost cluster_buffer;
    BufferCost global_buffer;

    struct {
        double bandwidth_bytes_per_s = 1;
        double energy_pj_per_byte = 1;
        double fixed_latency_ns = 1;
    } dram;

    struct {
        double energy_pj_per_bit = 1;
        std::uint32_t cycles_per_beat = 1;
    } bus;

    std::array<UnitCost, kAuxUnitCount> units{};

    const UnitCost& unit(AuxUnit u) const { return units[index_of(u)]; }

    double dram_bytes_per_cycle() const { return dram.bandwidth_bytes_per_s / clock_hz; }
    std::uint64_t dram_fixed_cycles() const;
};

/// Every numeric field set to 1, clock included, so one cycle is one second
/// and DRAM moves one byte per cycle.
TechCalibration unit_calibration();

TechCalibration parse_calibration(const nlohmann::json& j);
TechCalibration load_calibration(const std::filesystem::path& path);
nlohmann::json to_json(const TechCalibration& c);

struct AreaBreakdown {
    double pes = 0;
    double adder_trees = 0;
    double accumulators = 0;
    double buffers = 0;
    double units = 0;

    double total() const { return pes + adder_trees + accumulators + buffers + units; }
};

/// Instance counts behind chip_area; each component's area is count x unit area.
struct ComponentCounts {
    std::uint64_t pes;
    std::uint64_t adder_tree_inputs;
    std::uint64_t accumulators;
    std::uint64_t cluster_buffers;
    std::uint64_t global_buffers;
    std::uint64_t units_per_kind;
};

ComponentCounts component_counts(const HwConfig& h);
AreaBreakdown area_breakdown(const HwConfig& h, const TechCalibration& cal);
double chip_area(const HwConfig& h, const TechCalibration& cal);

/// Allowed values of every hardware parameter in a (possibly restricted) search space.
struct DesignSpace {
    std::vector<std::uint32_t> c_v, c_h, t_v_act, t_h_act, m_mult, pe_count;
    std::vector<std::uint32_t> bus_inter_cluster, bus_inter_tile, bus_intra_tile;

    std::uint64_t size() const;

    /// The full exploration space (~3.1e6 points).
    static DesignSpace full();
    /// The 1,024-point space used for GA-versus-exhaustive checks.
    static DesignSpace reduced();
};

inline constexpr std::array<std::uint32_t, 5> kPeCounts = {4, 9, 16, 25, 36};
inline constexpr std::array<std::uint32_t, 4> kBusWidths = {512, 1024, 2048, 4096};

std::uint64_t enumerate_space_size(const DesignSpace& space = DesignSpace::full());

} // namespace cimsim
