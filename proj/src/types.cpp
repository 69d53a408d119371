#include "cimsim/types.hpp"

#include <cstdio>

namespace cimsim {

std::string_view to_string(Precision p)
{
    return p == Precision::int4 ? "int4" : "int8";
}

std::string format_double(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

Precision parse_precision(std::string_view s)
{
    if (s == "int4") return Precision::int4;
    if (s == "int8") return Precision::int8;
    throw ConfigError("unknown precision '" + std::string(s) + "' (expected int4 or int8)");
}

std::string_view to_string(Stage s)
{
    switch (s) {
        case Stage::projection_q: return "projection_q";
        case Stage::projection_k: return "projection_k";
        case Stage::projection_v: return "projection_v";
        case Stage::attention_qk: return "attention_qk";
        case Stage::attention_sv: return "attention_sv";
        case Stage::linear:       return "linear";
        case Stage::ffn_up:       return "ffn_up";
        case Stage::ffn_gate:     return "ffn_gate";
        case Stage::ffn_down:     return "ffn_down";
    }
    return "unknown";
}

std::string_view to_string(AuxUnit u)
{
    switch (u) {
        case AuxUnit::softmax:     return "softmax";
        case AuxUnit::norm:        return "norm";
        case AuxUnit::quant:       return "quant";
        case AuxUnit::transpose:   return "transpose";
        case AuxUnit::activation:  return "activation";
        case AuxUnit::eltwise_mul: return "eltwise_mul";
    }
    return "unknown";
}

} // namespace cimsim
