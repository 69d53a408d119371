#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "cimsim/arch.hpp"
#include "cimsim/simcore.hpp"
#include "cimsim/workload.hpp"

namespace cimsim {

/// Latency/energy scalarization L^alpha * E^(1 - alpha). Throws
/// std::invalid_argument for non-positive metrics or alpha outside [0, 1].
double cost(double latency_s, double energy_j, double alpha);
double cost(const Metrics& m, double alpha);

inline constexpr std::size_t kGeneCount = 9;

/// Integer-coded design point: c_v, c_h, t_v_act, t_h_act, m_mult, then the
/// index of the PE count in {4,9,16,25,36}, then the index of each bus width
/// (inter-cluster, inter-tile, intra-tile) in {512,1024,2048,4096}.
struct Genome {
    std::array<std::uint32_t, kGeneCount> genes{};

    auto operator<=>(const Genome&) const = default;
};

inline constexpr std::array<const char*, kGeneCount> kGeneNames = {
    "c_v", "c_h", "t_v_act", "t_h_act", "m_mult", "p_index",
    "bus_inter_cluster_index", "bus_inter_tile_index", "bus_intra_tile_index",
};

/// Allowed gene values per position for a design space.
std::array<std::vector<std::uint32_t>, kGeneCount> gene_values(const DesignSpace& space);

HwConfig decode(const Genome& g, Precision precision);
Genome encode(const HwConfig& h);
bool in_space(const Genome& g, const DesignSpace& space);

/// Genome at `ordinal` in the mixed-radix enumeration of `space` (last gene fastest).
Genome genome_at(const DesignSpace& space, std::uint64_t ordinal);

/// Deterministic RNG shared by the GA operators.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() { return double(engine_() >> 11) * 0x1.0p-53; }
    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) { return std::uint64_t(uniform() * double(n)); }

private:
    std::mt19937_64 engine_;
};

/// SBX spread factor for uniform draw u.
double sbx_beta(double u, double eta_c);
/// Real-valued SBX children of p1 and p2 for draw u.
std::pair<double, double> sbx_pair(double p1, double p2, double u, double eta_c);
/// Polynomial-mutation perturbation in [-1, 1] for draw u.
double poly_delta(double u, double eta_m);

/// Gene-wise SBX on the index lattice of `space`; children are rounded to the
/// nearest allowed value and clamped into range.
std::pair<Genome, Genome> sbx_crossover(const Genome& a, const Genome& b, double eta_c,
                                        const DesignSpace& space, Rng& rng);
/// Polynomial mutation; each gene mutates with probability `gene_prob`.
Genome poly_mutation(const Genome& g, double eta_m, double gene_prob, const DesignSpace& space, Rng& rng);

struct GaSettings {
    std::uint32_t generations = 50;
    std::uint32_t population = 20;
    double crossover_prob = 1.0;
    double eta_c = 3.0;
    double eta_m = 3.0;
    /// Per-gene mutation probability; <= 0 selects 1 / kGeneCount.
    double mutation_prob = 0.0;
    std::uint64_t seed = 1;
    double alpha = 0.5;
    std::uint32_t jobs = 1;
    DesignSpace space = DesignSpace::full();
};

struct Evaluation {
    Genome genome;
    HwConfig hw;
    Metrics metrics;
    double cost = 0;
};

/// Cost ascending, then area ascending, then genome.
bool better(const Evaluation& a, const Evaluation& b);

struct GaRecord {
    std::uint32_t generation;
    Evaluation eval;
};

struct GaResult {
    Evaluation best;
    std::vector<GaRecord> history;
    /// Best-ever cost after each generation.
    std::vector<double> best_cost;
};

/// Evaluates genomes in parallel (up to `jobs` threads); results keep input order.
std::vector<Evaluation> evaluate_all(std::span<const Genome> genomes, const ModelConfig& m,
                                     const TechCalibration& cal, const TokenSetting& t,
                                     Precision precision, double alpha, std::uint32_t jobs);

GaResult run_ga(const ModelConfig& m, const TechCalibration& cal, const TokenSetting& t,
                Precision precision, const GaSettings& s);

inline constexpr std::uint64_t kExhaustiveLimit = 100'000;

/// Evaluates every point of `space` and returns them ranked best first.
/// Throws std::length_error when the space exceeds kExhaustiveLimit.
std::vector<Evaluation> exhaustive_search(const DesignSpace& space, const ModelConfig& m,
                                          const TechCalibration& cal, const TokenSetting& t,
                                          Precision precision, double alpha, std::uint32_t jobs = 1);

/// Re-scores evaluations at a new alpha and ranks them best first.
std::vector<Evaluation> rank_at(std::vector<Evaluation> evals, double alpha);

struct LatencyEnergy {
    double latency;
    double energy;

    bool operator==(const LatencyEnergy&) const = default;
};

/// Indices of the non-dominated points, in input order.
std::vector<std::size_t> pareto_front(std::span<const LatencyEnergy> points);

/// GA history as CSV: generation, nine gene columns, latency_s, energy_j, area_mm2, cost.
void write_history_csv(std::ostream& os, const GaResult& r);

} // namespace cimsim
