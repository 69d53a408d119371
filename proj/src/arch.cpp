#include "cimsim/arch.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace cimsim {

namespace {


std::uint32_t to_u32(std::int64_t v, const std::string& key)
{
    if (v < 0 || v > std::int64_t{1} << 31) throw ConfigError("hw key '" + key + "' out of range");
    return static_cast<std::uint32_t>(v);
}

std::uint32_t side_from_pe_count(std::uint32_t count)
{
    const auto side = static_cast<std::uint32_t>(std::lround(std::sqrt(double(count))));
    if (side * side != count) {
        throw ConfigError("pe_count " + std::to_string(count) + " is not a perfect square");
    }
    return side;
}

// Applies one key of a hardware description; m_mult and t_total are resolved by the caller.
void apply_hw_key(HwConfig& h, const std::string& key, std::int64_t value,
                  std::int64_t& m_mult, std::int64_t& t_total)
{
    if (key == "c_v") h.c_v = to_u32(value, key);
    else if (key == "c_h") h.c_h = to_u32(value, key);
    else if (key == "t_v_act") h.t_v_act = to_u32(value, key);
    else if (key == "t_h_act") h.t_h_act = to_u32(value, key);
    else if (key == "t_total") t_total = value;
    else if (key == "m_mult") m_mult = value;
    else if (key == "p_side") h.p_side = to_u32(value, key);
    else if (key == "pe_count") h.p_side = side_from_pe_count(to_u32(value, key));
    else if (key == "bus_inter_cluster") h.bus_inter_cluster = to_u32(value, key);
    else if (key == "bus_inter_tile") h.bus_inter_tile = to_u32(value, key);
    else if (key == "bus_intra_tile") h.bus_intra_tile = to_u32(value, key);
    else throw ConfigError("unknown hw key '" + key + "'");
}

void resolve_tiles(HwConfig& h, std::int64_t m_mult, std::int64_t t_total)
{
    if (m_mult >= 0 && t_total >= 0 && t_total != m_mult * h.active_tiles()) {
        throw ConfigError("hw config gives both m_mult and t_total and they disagree");
    }
    if (t_total >= 0) h.t_total = to_u32(t_total, "t_total");
    else if (m_mult >= 0) h.t_total = to_u32(m_mult, "m_mult") * h.active_tiles();
    else h.t_total = h.active_tiles();
}

double read_positive(const nlohmann::json& j, const std::string& path, const char* key)
{
    const std::string full = path.empty() ? key : path + "." + key;
    if (!j.contains(key)) throw ConfigError("missing calibration entry: " + full);
    const auto& v = j.at(key);
    if (!v.is_number()) throw ConfigError("calibration entry " + full + " must be a number");
    const double x = v.get<double>();
    if (!(x > 0) || !std::isfinite(x)) throw ConfigError("calibration entry " + full + " must be > 0");
    return x;
}

std::uint32_t read_positive_count(const nlohmann::json& j, const std::string& path, const char* key)
{
    const double x = read_positive(j, path, key);
    if (x != std::floor(x)) throw ConfigError("calibration entry " + path + "." + key + " must be an integer");
    return static_cast<std::uint32_t>(x);
}

const nlohmann::json& section(const nlohmann::json& j, const char* key)
{
    if (!j.contains(key) || !j.at(key).is_object()) {
        throw ConfigError(std::string("missing calibration entry: ") + key);
    }
    return j.at(key);
}

BufferCost read_buffer(const nlohmann::json& j, const char* key)
{
    const auto& s = section(j, key);
    BufferCost b;
    b.read_pj_per_byte = read_positive(s, key, "read_pj_per_byte");
    b.write_pj_per_byte = read_positive(s, key, "write_pj_per_byte");
    b.cycles_per_access = read_positive_count(s, key, "cycles_per_access");
    b.area_mm2 = read_positive(s, key, "area_mm2");
    return b;
}

nlohmann::json buffer_json(const BufferCost& b)
{
    return {{"read_pj_per_byte", b.read_pj_per_byte},
            {"write_pj_per_byte", b.write_pj_per_byte},
            {"cycles_per_access", b.cycles_per_access},
            {"area_mm2", b.area_mm2}};
}

template <typename Range>
bool contains(const Range& r, std::uint32_t v)
{
    return std::find(std::begin(r), std::end(r), v) != std::end(r);
}

} // namespace

HwConfig reference_hw()
{
    HwConfig h;
    h.c_v = 2;
    h.c_h = 3;
    h.t_v_act = 4;
    h.t_h_act = 2;
    h.t_total = 8;
    h.p_side = 2;
    h.bus_inter_cluster = 4096;
    h.bus_inter_tile = 4096;
    h.bus_intra_tile = 4096;
    h.precision = Precision::int8;
    return h;
}

HwConfig parse_hw_config(const nlohmann::json& j)
{
    if (!j.is_object()) throw ConfigError("hw config must be a JSON object");
    HwConfig h;
    std::int64_t m_mult = -1;
    std::int64_t t_total = -1;
    for (const auto& [key, value] : j.items()) {
        if (key == "precision") {
            h.precision = parse_precision(value.get<std::string>());
            continue;
        }
        if (!value.is_number_integer()) throw ConfigError("hw key '" + key + "' must be an integer");
        apply_hw_key(h, key, value.get<std::int64_t>(), m_mult, t_total);
    }
    resolve_tiles(h, m_mult, t_total);
    return h;
}

HwConfig load_hw_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw IoError("cannot open hw config " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("parse error in " + path.string() + ": " + e.what());
    }
    return parse_hw_config(j);
}

HwConfig parse_hw_inline(const std::string& spec)
{
    HwConfig h;
    std::int64_t m_mult = -1;
    std::int64_t t_total = -1;
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        const auto eq = item.find('=');
        if (eq == std::string::npos) throw ConfigError("expected key=value in hw spec, got '" + item + "'");
        const std::string key = item.substr(0, eq);
        const std::string value = item.substr(eq + 1);
        if (key == "precision") {
            h.precision = parse_precision(value);
            continue;
        }
        std::int64_t v = 0;
        try {
            std::size_t used = 0;
            v = std::stoll(value, &used);
            if (used != value.size()) throw std::invalid_argument(value);
        } catch (const std::exception&) {
            throw ConfigError("hw key '" + key + "' needs an integer, got '" + value + "'");
        }
        apply_hw_key(h, key, v, m_mult, t_total);
    }
    resolve_tiles(h, m_mult, t_total);
    return h;
}

nlohmann::json to_json(const HwConfig& h)
{
    return {
        {"c_v", h.c_v},
        {"c_h", h.c_h},
        {"t_v_act", h.t_v_act},
        {"t_h_act", h.t_h_act},
        {"t_total", h.t_total},
        {"p_side", h.p_side},
        {"bus_inter_cluster", h.bus_inter_cluster},
        {"bus_inter_tile", h.bus_inter_tile},
        {"bus_intra_tile", h.bus_intra_tile},
        {"precision", std::string(to_string(h.precision))},
    };
}

std::vector<std::string> validate(const HwConfig& h, bool dse_mode)
{
    std::vector<std::string> out;
    const std::pair<const char*, std::uint32_t> counts[] = {
        {"c_v", h.c_v},
        {"c_h", h.c_h},
        {"t_v_act", h.t_v_act},
        {"t_h_act", h.t_h_act},
        {"t_total", h.t_total},
        {"p_side", h.p_side},
        {"bus_inter_cluster", h.bus_inter_cluster},
        {"bus_inter_tile", h.bus_inter_tile},
        {"bus_intra_tile", h.bus_intra_tile},
    };
    for (const auto& [name, v] : counts) {
        if (v < 1) out.push_back(std::string(name) + " must be >= 1");
    }
    const std::uint32_t t_a = h.active_tiles();
    if (t_a > 0 && h.t_total % t_a != 0) {
        out.push_back("non-integral m_mult: t_total " + std::to_string(h.t_total) +
                      " is not a multiple of active tiles " + std::to_string(t_a));
    }
    if (!dse_mode) return out;

    auto range = [&out](const char* name, std::uint32_t v, std::uint32_t lo, std::uint32_t hi) {
        if (v < lo) out.push_back(std::string(name) + " below " + std::to_string(lo));
        else if (v > hi) out.push_back(std::string(name) + " above " + std::to_string(hi));
    };
    range("c_v", h.c_v, 1, 5);
    range("c_h", h.c_h, 1, 5);
    range("t_v_act", h.t_v_act, 2, 8);
    range("t_h_act", h.t_h_act, 2, 8);
    if (t_a > 0 && h.t_total % t_a == 0) range("m_mult", h.m_mult(), 1, 8);
    if (!contains(kPeCounts, h.pes_per_tile())) {
        out.push_back("pe_count " + std::to_string(h.pes_per_tile()) + " not in {4,9,16,25,36}");
    }
    const std::pair<const char*, std::uint32_t> buses[] = {
        {"bus_inter_cluster", h.bus_inter_cluster},
        {"bus_inter_tile", h.bus_inter_tile},
        {"bus_intra_tile", h.bus_intra_tile},
    };
    for (const auto& [name, v] : buses) {
        if (!contains(kBusWidths, v)) out.push_back(std::string(name) + " not in {512,1024,2048,4096}");
    }
    return out;
}

TileCapacity pe_tile_capacity(const HwConfig& h)
{
    return {std::uint64_t{kMacroRows} * h.p_side,
            std::uint64_t{macro_weight_cols(h.precision)} * h.p_side};
}

std::uint64_t TechCalibration::dram_fixed_cycles() const
{
    return static_cast<std::uint64_t>(std::ceil(dram.fixed_latency_ns * 1e-9 * clock_hz));
}

TechCalibration unit_calibration()
{
    TechCalibration c;
    c.tech_node_nm = 1;
    c.provenance = "unit calibration";
    c.clock_hz = 1;
    for (auto& u : c.units) u = UnitCost{};
    return c;
}

TechCalibration parse_calibration(const nlohmann::json& j)
{
    if (!j.is_object()) throw ConfigError("calibration must be a JSON object");
    TechCalibration c;
    c.tech_node_nm = read_positive(j, "", "tech_node_nm");
    if (!j.contains("provenance") || !j.at("provenance").is_string()) {
        throw ConfigError("missing calibration entry: provenance");
    }
    c.provenance = j.at("provenance").get<std::string>();
    c.clock_hz = read_positive(j, "", "clock_hz");

    const auto& pe = section(j, "pe");
    c.pe.cycles_per_input_bit = read_positive_count(pe, "pe", "cycles_per_input_bit");
    c.pe.energy_pj_per_mac = read_positive(pe, "pe", "energy_pj_per_mac");
    c.pe.area_mm2 = read_positive(pe, "pe", "area_mm2");
    c.pe.weight_write_energy_pj_per_byte = read_positive(pe, "pe", "weight_write_energy_pj_per_byte");

    const auto& tree = section(j, "adder_tree");
    c.adder_tree.cycles_per_level = read_positive_count(tree, "adder_tree", "cycles_per_level");
    c.adder_tree.energy_pj_per_add = read_positive(tree, "adder_tree", "energy_pj_per_add");
    c.adder_tree.area_mm2_per_input = read_positive(tree, "adder_tree", "area_mm2_per_input");

    const auto& acc = section(j, "accumulator");
    c.accumulator.energy_pj_per_acc = read_positive(acc, "accumulator", "energy_pj_per_acc");
    c.accumulator.area_mm2 = read_positive(acc, "accumulator", "area_mm2");

    c.cluster_buffer = read_buffer(j, "cluster_buffer");
    c.global_buffer = read_buffer(j, "global_buffer");

    const auto& dram = section(j, "dram");
    c.dram.bandwidth_bytes_per_s = read_positive(dram, "dram", "bandwidth_bytes_per_s");
    c.dram.energy_pj_per_byte = read_positive(dram, "dram", "energy_pj_per_byte");
    c.dram.fixed_latency_ns = read_positive(dram, "dram", "fixed_latency_ns");

    const auto& bus = section(j, "bus");
    c.bus.energy_pj_per_bit = read_positive(bus, "bus", "energy_pj_per_bit");
    c.bus.cycles_per_beat = read_positive_count(bus, "bus", "cycles_per_beat");

    const auto& units = section(j, "units");
    for (AuxUnit u : kAllAuxUnits) {
        const std::string name(to_string(u));
        if (!units.contains(name) || !units.at(name).is_object()) {
            throw ConfigError("missing calibration entry: units." + name);
        }
        const auto& s = units.at(name);
        const std::string path = "units." + name;
        auto& dst = c.units[index_of(u)];
        dst.cycles_per_element = read_positive(s, path, "cycles_per_element");
        dst.energy_pj_per_element = read_positive(s, path, "energy_pj_per_element");
        dst.area_mm2 = read_positive(s, path, "area_mm2");
    }
    return c;
}

TechCalibration load_calibration(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw IoError("cannot open calibration " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("parse error in " + path.string() + ": " + e.what());
    }
    return parse_calibration(j);
}

nlohmann::json to_json(const TechCalibration& c)
{
    nlohmann::json units = nlohmann::json::object();
    for (AuxUnit u : kAllAuxUnits) {
        const auto& x = c.unit(u);
        units[std::string(to_string(u))] = {{"cycles_per_element", x.cycles_per_element},
                                            {"energy_pj_per_element", x.energy_pj_per_element},
                                            {"area_mm2", x.area_mm2}};
    }
    return {
        {"tech_node_nm", c.tech_node_nm},
        {"provenance", c.provenance},
        {"clock_hz", c.clock_hz},
        {"pe",
         {{"cycles_per_input_bit", c.pe.cycles_per_input_bit},
          {"energy_pj_per_mac", c.pe.energy_pj_per_mac},
          {"area_mm2", c.pe.area_mm2},
          {"weight_write_energy_pj_per_byte", c.pe.weight_write_energy_pj_per_byte}}},
        {"adder_tree",
         {{"cycles_per_level", c.adder_tree.cycles_per_level},
          {"energy_pj_per_add", c.adder_tree.energy_pj_per_add},
          {"area_mm2_per_input", c.adder_tree.area_mm2_per_input}}},
        {"accumulator",
         {{"energy_pj_per_acc", c.accumulator.energy_pj_per_acc},
          {"area_mm2", c.accumulator.area_mm2}}},
        {"cluster_buffer", buffer_json(c.cluster_buffer)},
        {"global_buffer", buffer_json(c.global_buffer)},
        {"dram",
         {{"bandwidth_bytes_per_s", c.dram.bandwidth_bytes_per_s},
          {"energy_pj_per_byte", c.dram.energy_pj_per_byte},
          {"fixed_latency_ns", c.dram.fixed_latency_ns}}},
        {"bus", {{"energy_pj_per_bit", c.bus.energy_pj_per_bit}, {"cycles_per_beat", c.bus.cycles_per_beat}}},
        {"units", units},
    };
}

ComponentCounts component_counts(const HwConfig& h)
{
    const std::uint64_t clusters = h.clusters();
    const std::uint64_t tiles = clusters * h.t_total;
    const std::uint64_t pes = tiles * h.pes_per_tile();
    return {
        .pes = pes,
        // Tile trees take one input per PE; cluster trees one per tile; the chip tree one per cluster.
        .adder_tree_inputs = pes + tiles + clusters,
        .accumulators = clusters + 1,
        .cluster_buffers = clusters,
        .global_buffers = 1,
        .units_per_kind = clusters,
    };
}

AreaBreakdown area_breakdown(const HwConfig& h, const TechCalibration& cal)
{
    const auto n = component_counts(h);
    AreaBreakdown a;
    a.pes = double(n.pes) * cal.pe.area_mm2;
    a.adder_trees = double(n.adder_tree_inputs) * cal.adder_tree.area_mm2_per_input;
    a.accumulators = double(n.accumulators) * cal.accumulator.area_mm2;
    a.buffers = double(n.cluster_buffers) * cal.cluster_buffer.area_mm2 +
                double(n.global_buffers) * cal.global_buffer.area_mm2;
    for (const auto& u : cal.units) a.units += double(n.units_per_kind) * u.area_mm2;
    return a;
}

double chip_area(const HwConfig& h, const TechCalibration& cal)
{
    return area_breakdown(h, cal).total();
}

std::uint64_t DesignSpace::size() const
{
    std::uint64_t n = 1;
    for (const auto* v : {&c_v, &c_h, &t_v_act, &t_h_act, &m_mult, &pe_count,
                          &bus_inter_cluster, &bus_inter_tile, &bus_intra_tile}) {
        n *= v->size();
    }
    return n;
}

DesignSpace DesignSpace::full()
{
    const std::vector<std::uint32_t> buses(kBusWidths.begin(), kBusWidths.end());
    return {
        .c_v = {1, 2, 3, 4, 5},
        .c_h = {1, 2, 3, 4, 5},
        .t_v_act = {2, 3, 4, 5, 6, 7, 8},
        .t_h_act = {2, 3, 4, 5, 6, 7, 8},
        .m_mult = {1, 2, 3, 4, 5, 6, 7, 8},
        .pe_count = {kPeCounts.begin(), kPeCounts.end()},
        .bus_inter_cluster = buses,
        .bus_inter_tile = buses,
        .bus_intra_tile = buses,
    };
}

DesignSpace DesignSpace::reduced()
{
    const std::vector<std::uint32_t> buses(kBusWidths.begin(), kBusWidths.end());
    return {
        .c_v = {1, 2},
        .c_h = {1, 2},
        .t_v_act = {2, 3},
        .t_h_act = {2, 3},
        .m_mult = {1, 2},
        .pe_count = {4, 9},
        .bus_inter_cluster = {4096},
        .bus_inter_tile = buses,
        .bus_intra_tile = buses,
    };
}

std::uint64_t enumerate_space_size(const DesignSpace& space)
{
    return space.size();
}

} // namespace cimsim
