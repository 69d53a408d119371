#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace cimsim {

/// Raised for malformed or invalid configuration and calibration input.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised when an input file cannot be opened or an output cannot be written.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Precision { int4, int8 };

constexpr int input_bits(Precision p) { return p == Precision::int4 ? 4 : 8; }

/// Bytes occupied by `elems` packed elements (INT4 packs two per byte).
constexpr std::uint64_t packed_bytes(std::uint64_t elems, Precision p)
{
    return p == Precision::int8 ? elems : (elems + 1) / 2;
}

std::string_view to_string(Precision p);

/// Shortest round-trippable text for a double ("%.17g"), used in all CSV output.
std::string format_double(double v);
Precision parse_precision(std::string_view s);

/// Decode stages in dataflow order.
enum class Stage {
    projection_q,
    projection_k,
    projection_v,
    attention_qk,
    attention_sv,
    linear,
    ffn_up,
    ffn_gate,
    ffn_down,
};

inline constexpr std::size_t kStageCount = 9;

inline constexpr std::array<Stage, kStageCount> kAllStages = {
    Stage::projection_q, Stage::projection_k, Stage::projection_v,
    Stage::attention_qk, Stage::attention_sv, Stage::linear,
    Stage::ffn_up,       Stage::ffn_gate,     Stage::ffn_down,
};

constexpr std::size_t index_of(Stage s) { return static_cast<std::size_t>(s); }

std::string_view to_string(Stage s);

/// Dedicated functional units attached to each cluster.
enum class AuxUnit { softmax, norm, quant, transpose, activation, eltwise_mul };

inline constexpr std::size_t kAuxUnitCount = 6;

inline constexpr std::array<AuxUnit, kAuxUnitCount> kAllAuxUnits = {
    AuxUnit::softmax, AuxUnit::norm,       AuxUnit::quant,
    AuxUnit::transpose, AuxUnit::activation, AuxUnit::eltwise_mul,
};

constexpr std::size_t index_of(AuxUnit u) { return static_cast<std::size_t>(u); }

std::string_view to_string(AuxUnit u);

struct AuxOp {
    AuxUnit unit;
    std::uint64_t elements;

    bool operator==(const AuxOp&) const = default;
};

constexpr std::uint64_t ceil_div(std::uint64_t a, std::uint64_t b) { return (a + b - 1) / b; }

/// ceil(log2(n)) for n >= 1; 0 for n <= 1.
constexpr std::uint32_t ceil_log2(std::uint64_t n)
{
    std::uint32_t levels = 0;
    std::uint64_t reach = 1;
    while (reach < n) {
        reach <<= 1;
        ++levels;
    }
    return levels;
}

} // namespace cimsim
