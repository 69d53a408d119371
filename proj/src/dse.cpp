#include "cimsim/dse.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <thread>

namespace cimsim {

namespace {

template <std::size_t N>
std::vector<std::uint32_t> indices_in(const std::vector<std::uint32_t>& values,
                                      const std::array<std::uint32_t, N>& table, const char* what)
{
    std::vector<std::uint32_t> out;
    for (auto v : values) {
        const auto it = std::find(table.begin(), table.end(), v);
        if (it == table.end()) throw std::invalid_argument(std::string("design space: unsupported ") + what);
        out.push_back(static_cast<std::uint32_t>(it - table.begin()));
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::size_t position_of(const std::vector<std::uint32_t>& values, std::uint32_t v)
{
    const auto it = std::find(values.begin(), values.end(), v);
    if (it == values.end()) throw std::invalid_argument("gene value outside design space");
    return static_cast<std::size_t>(it - values.begin());
}

// Rounds a real lattice coordinate to the nearest allowed position.
std::uint32_t snap(double x, std::size_t n)
{
    const double r = std::round(x);
    if (!(r > 0)) return 0;
    return static_cast<std::uint32_t>(std::min<double>(r, double(n - 1)));
}

void check_settings(const GaSettings& s)
{
    if (s.population < 2 || s.population % 2 != 0) throw std::invalid_argument("GA population must be even and >= 2");
    if (s.generations < 1) throw std::invalid_argument("GA needs at least one generation");
    if (!(s.alpha >= 0 && s.alpha <= 1)) throw std::invalid_argument("alpha must lie in [0, 1]");
    if (!(s.crossover_prob >= 0 && s.crossover_prob <= 1)) throw std::invalid_argument("crossover_prob must lie in [0, 1]");
}

std::string genome_text(const Genome& g)
{
    std::string s = "[";
    for (std::size_t i = 0; i < kGeneCount; ++i) {
        if (i) s += ",";
        s += std::string(kGeneNames[i]) + "=" + std::to_string(g.genes[i]);
    }
    return s + "]";
}

} // namespace

double cost(double latency_s, double energy_j, double alpha)
{
    if (!(latency_s > 0) || !(energy_j > 0)) throw std::invalid_argument("cost: latency and energy must be > 0");
    if (!(alpha >= 0 && alpha <= 1)) throw std::invalid_argument("cost: alpha must lie in [0, 1]");
    if (alpha == 1) return latency_s;
    if (alpha == 0) return energy_j;
    return std::pow(latency_s, alpha) * std::pow(energy_j, 1 - alpha);
}

double cost(const Metrics& m, double alpha)
{
    return cost(m.latency_s, m.energy_j, alpha);
}

std::array<std::vector<std::uint32_t>, kGeneCount> gene_values(const DesignSpace& space)
{
    auto sorted = [](std::vector<std::uint32_t> v) {
        std::sort(v.begin(), v.end());
        return v;
    };
    return {
        sorted(space.c_v),
        sorted(space.c_h),
        sorted(space.t_v_act),
        sorted(space.t_h_act),
        sorted(space.m_mult),
        indices_in(space.pe_count, kPeCounts, "PE count"),
        indices_in(space.bus_inter_cluster, kBusWidths, "bus width"),
        indices_in(space.bus_inter_tile, kBusWidths, "bus width"),
        indices_in(space.bus_intra_tile, kBusWidths, "bus width"),
    };
}

HwConfig decode(const Genome& g, Precision precision)
{
    const auto& x = g.genes;
    HwConfig h;
    h.c_v = x[0];
    h.c_h = x[1];
    h.t_v_act = x[2];
    h.t_h_act = x[3];
    h.t_total = x[4] * x[2] * x[3];
    h.p_side = static_cast<std::uint32_t>(std::lround(std::sqrt(double(kPeCounts.at(x[5])))));
    h.bus_inter_cluster = kBusWidths.at(x[6]);
    h.bus_inter_tile = kBusWidths.at(x[7]);
    h.bus_intra_tile = kBusWidths.at(x[8]);
    h.precision = precision;
    return h;
}

Genome encode(const HwConfig& h)
{
    auto index = [](const auto& table, std::uint32_t v) {
        const auto it = std::find(table.begin(), table.end(), v);
        if (it == table.end()) throw std::invalid_argument("encode: value outside the design space");
        return static_cast<std::uint32_t>(it - table.begin());
    };
    return {{h.c_v, h.c_h, h.t_v_act, h.t_h_act, h.m_mult(), index(kPeCounts, h.pes_per_tile()),
             index(kBusWidths, h.bus_inter_cluster), index(kBusWidths, h.bus_inter_tile),
             index(kBusWidths, h.bus_intra_tile)}};
}

bool in_space(const Genome& g, const DesignSpace& space)
{
    const auto values = gene_values(space);
    for (std::size_t i = 0; i < kGeneCount; ++i) {
        if (std::find(values[i].begin(), values[i].end(), g.genes[i]) == values[i].end()) return false;
    }
    return true;
}

Genome genome_at(const DesignSpace& space, std::uint64_t ordinal)
{
    const auto values = gene_values(space);
    Genome g;
    for (std::size_t i = kGeneCount; i-- > 0;) {
        const std::uint64_t n = values[i].size();
        g.genes[i] = values[i][ordinal % n];
        ordinal /= n;
    }
    return g;
}

double sbx_beta(double u, double eta_c)
{
    const double e = 1.0 / (eta_c + 1.0);
    if (u <= 0.5) return std::pow(2.0 * u, e);
    return std::pow(1.0 / (2.0 * (1.0 - u)), e);
}

std::pair<double, double> sbx_pair(double p1, double p2, double u, double eta_c)
{
    const double beta = sbx_beta(u, eta_c);
    return {0.5 * ((1 + beta) * p1 + (1 - beta) * p2), 0.5 * ((1 - beta) * p1 + (1 + beta) * p2)};
}

double poly_delta(double u, double eta_m)
{
    const double e = 1.0 / (eta_m + 1.0);
    if (u < 0.5) return std::pow(2.0 * u, e) - 1.0;
    return 1.0 - std::pow(2.0 * (1.0 - u), e);
}

std::pair<Genome, Genome> sbx_crossover(const Genome& a, const Genome& b, double eta_c,
                                        const DesignSpace& space, Rng& rng)
{
    const auto values = gene_values(space);
    Genome c1 = a;
    Genome c2 = b;
    for (std::size_t i = 0; i < kGeneCount; ++i) {
        const auto& v = values[i];
        const double u = rng.uniform();
        const double x1 = double(position_of(v, a.genes[i]));
        const double x2 = double(position_of(v, b.genes[i]));
        const auto [y1, y2] = sbx_pair(x1, x2, u, eta_c);
        c1.genes[i] = v[snap(y1, v.size())];
        c2.genes[i] = v[snap(y2, v.size())];
    }
    return {c1, c2};
}

Genome poly_mutation(const Genome& g, double eta_m, double gene_prob, const DesignSpace& space, Rng& rng)
{
    const auto values = gene_values(space);
    Genome out = g;
    for (std::size_t i = 0; i < kGeneCount; ++i) {
        const auto& v = values[i];
        const double gate = rng.uniform();
        const double u = rng.uniform();
        if (gate >= gene_prob || v.size() < 2) continue;
        // The lattice spans [-0.5, n - 0.5] so every position has an equal rounding basin.
        const double x = double(position_of(v, g.genes[i]));
        out.genes[i] = v[snap(x + poly_delta(u, eta_m) * double(v.size()), v.size())];
    }
    return out;
}

bool better(const Evaluation& a, const Evaluation& b)
{
    if (a.cost != b.cost) return a.cost < b.cost;
    if (a.metrics.area_mm2 != b.metrics.area_mm2) return a.metrics.area_mm2 < b.metrics.area_mm2;
    return a.genome < b.genome;
}

std::vector<Evaluation> evaluate_all(std::span<const Genome> genomes, const ModelConfig& m,
                                     const TechCalibration& cal, const TokenSetting& t,
                                     Precision precision, double alpha, std::uint32_t jobs)
{
    std::vector<Evaluation> out(genomes.size());
    auto work = [&](std::size_t i) {
        Evaluation& e = out[i];
        e.genome = genomes[i];
        e.hw = decode(genomes[i], precision);
        try {
            e.metrics = simulate_decode(m, e.hw, cal, t);
        } catch (const std::exception& ex) {
            throw std::runtime_error("simulation failed for genome " + genome_text(genomes[i]) + ": " + ex.what());
        }
        e.cost = cost(e.metrics, alpha);
    };

    const std::size_t workers = std::min<std::size_t>(std::max(jobs, 1u), genomes.size());
    if (workers <= 1) {
        for (std::size_t i = 0; i < genomes.size(); ++i) work(i);
        return out;
    }
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> threads;
    threads.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        threads.emplace_back([&, w] {
            try {
                for (std::size_t i = w; i < genomes.size(); i += workers) work(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& th : threads) th.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    return out;
}

GaResult run_ga(const ModelConfig& m, const TechCalibration& cal, const TokenSetting& t,
                Precision precision, const GaSettings& s)
{
    check_settings(s);
    const auto values = gene_values(s.space);
    const double gene_prob = s.mutation_prob > 0 ? s.mutation_prob : 1.0 / kGeneCount;
    Rng rng(s.seed);

    std::map<Genome, Evaluation> cache;
    auto evaluate = [&](const std::vector<Genome>& pop) {
        std::vector<Genome> fresh;
        for (const auto& g : pop) {
            if (!cache.count(g) && std::find(fresh.begin(), fresh.end(), g) == fresh.end()) fresh.push_back(g);
        }
        for (auto& e : evaluate_all(fresh, m, cal, t, precision, s.alpha, s.jobs)) cache.emplace(e.genome, std::move(e));
        std::vector<Evaluation> out;
        out.reserve(pop.size());
        for (const auto& g : pop) out.push_back(cache.at(g));
        return out;
    };

    GaResult result;
    auto record = [&](std::uint32_t generation, const std::vector<Evaluation>& evals) {
        for (const auto& e : evals) {
            result.history.push_back({generation, e});
            if (result.history.size() == 1 || better(e, result.best)) result.best = e;
        }
        result.best_cost.push_back(result.best.cost);
    };

    std::vector<Genome> genomes(s.population);
    for (auto& g : genomes) {
        for (std::size_t i = 0; i < kGeneCount; ++i) g.genes[i] = values[i][rng.below(values[i].size())];
    }
    auto population = evaluate(genomes);
    record(1, population);

    auto tournament = [&]() -> const Genome& {
        const auto& a = population[rng.below(population.size())];
        const auto& b = population[rng.below(population.size())];
        return better(a, b) ? a.genome : b.genome;
    };

    for (std::uint32_t gen = 2; gen <= s.generations; ++gen) {
        std::vector<Genome> children;
        children.reserve(s.population);
        children.push_back(result.best.genome);
        while (children.size() < s.population) {
            const Genome pa = tournament();
            const Genome pb = tournament();
            auto kids = std::make_pair(pa, pb);
            if (rng.uniform() < s.crossover_prob) kids = sbx_crossover(pa, pb, s.eta_c, s.space, rng);
            children.push_back(poly_mutation(kids.first, s.eta_m, gene_prob, s.space, rng));
            if (children.size() < s.population) {
                children.push_back(poly_mutation(kids.second, s.eta_m, gene_prob, s.space, rng));
            }
        }
        population = evaluate(children);
        record(gen, population);
    }
    return result;
}

std::vector<Evaluation> exhaustive_search(const DesignSpace& space, const ModelConfig& m,
                                          const TechCalibration& cal, const TokenSetting& t,
                                          Precision precision, double alpha, std::uint32_t jobs)
{
    const std::uint64_t n = space.size();
    if (n > kExhaustiveLimit) {
        throw std::length_error("exhaustive search over " + std::to_string(n) + " points exceeds the limit of " +
                                std::to_string(kExhaustiveLimit));
    }
    std::vector<Genome> genomes;
    genomes.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i) genomes.push_back(genome_at(space, i));
    auto evals = evaluate_all(genomes, m, cal, t, precision, alpha, jobs);
    std::sort(evals.begin(), evals.end(), better);
    return evals;
}

std::vector<Evaluation> rank_at(std::vector<Evaluation> evals, double alpha)
{
    for (auto& e : evals) e.cost = cost(e.metrics, alpha);
    std::sort(evals.begin(), evals.end(), better);
    return evals;
}

std::vector<std::size_t> pareto_front(std::span<const LatencyEnergy> points)
{
    std::vector<std::size_t> order(points.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (points[a].latency != points[b].latency) return points[a].latency < points[b].latency;
        return points[a].energy < points[b].energy;
    });

    std::vector<std::size_t> keep;
    double best_energy = std::numeric_limits<double>::infinity();
    const LatencyEnergy* last = nullptr;
    for (std::size_t i : order) {
        const auto& p = points[i];
        if (p.energy < best_energy) {
            best_energy = p.energy;
            last = &p;
            keep.push_back(i);
        } else if (last && p == *last) {
            // Exact duplicates of a front point do not dominate each other.
            keep.push_back(i);
        }
    }
    std::sort(keep.begin(), keep.end());
    return keep;
}

void write_history_csv(std::ostream& os, const GaResult& r)
{
    os << "generation";
    for (const auto* name : kGeneNames) os << ',' << name;
    os << ",latency_s,energy_j,area_mm2,cost\n";
    for (const auto& rec : r.history) {
        os << rec.generation;
        for (auto g : rec.eval.genome.genes) os << ',' << g;
        os << ',' << format_double(rec.eval.metrics.latency_s) << ',' << format_double(rec.eval.metrics.energy_j)
           << ',' << format_double(rec.eval.metrics.area_mm2) << ',' << format_double(rec.eval.cost) << '\n';
    }
}

} // namespace cimsim
