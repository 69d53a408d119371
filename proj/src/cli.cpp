#include "cimsim/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "cimsim/dse.hpp"
#include "cimsim/mapper.hpp"
#include "cimsim/simcore.hpp"

namespace cimsim {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Options {
    std::string model;
    std::string hw;
    std::string calib;
    std::string precision;
    std::string out;
    std::string format = "csv";
    std::string space;
    std::string models_dir;
    std::string manifest;
    std::uint32_t prefill = 128;
    std::uint32_t decode = 128;
    double alpha = 0.5;
    std::uint64_t seed = 1;
    std::uint32_t jobs = 0;
    std::uint32_t generations = 50;
    std::uint32_t population = 20;
    std::vector<double> alphas{0.0, 0.25, 0.5, 0.75, 1.0};
    std::uint32_t repeats = 5;
    std::vector<std::uint32_t> prefill_grid{64, 128, 256, 512};
    std::vector<std::uint32_t> decode_grid{64, 128, 256, 512};
    bool dump_plans = false;
};

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<json>> rows;
};

std::string cell_text(const json& v)
{
    if (v.is_number_float()) return format_double(v.get<double>());
    if (v.is_string()) return v.get<std::string>();
    return v.dump();
}

std::string table_csv(const Table& t)
{
    std::ostringstream os;
    for (std::size_t i = 0; i < t.header.size(); ++i) os << (i ? "," : "") << t.header[i];
    os << '\n';
    for (const auto& row : t.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << cell_text(row[i]);
        os << '\n';
    }
    return os.str();
}

json table_json(const Table& t)
{
    json rows = json::array();
    for (const auto& row : t.rows) {
        json obj = json::object();
        for (std::size_t i = 0; i < row.size(); ++i) obj[t.header[i]] = row[i];
        rows.push_back(std::move(obj));
    }
    return {{"columns", t.header}, {"rows", rows}};
}

/// Collects the files written by one command under the --out directory.
class Outputs {
public:
    explicit Outputs(fs::path dir) : dir_(std::move(dir))
    {
        std::error_code ec;
        fs::create_directories(dir_, ec);
        if (ec || !fs::is_directory(dir_)) throw IoError("cannot create output directory " + dir_.string());
    }

    void text(const std::string& name, const std::string& content)
    {
        const auto path = dir_ / name;
        std::ofstream os(path, std::ios::binary);
        os << content;
        os.close();
        if (!os) throw IoError("cannot write " + path.string());
        files_.push_back(path.string());
    }

    void json_file(const std::string& name, const json& j) { text(name, j.dump(2) + "\n"); }

    void table(const std::string& stem, const Table& t, const std::string& format)
    {
        if (format == "json") json_file(stem + ".json", table_json(t));
        else text(stem + ".csv", table_csv(t));
    }

    const std::vector<std::string>& files() const { return files_; }
    const fs::path& dir() const { return dir_; }

private:
    fs::path dir_;
    std::vector<std::string> files_;
};

std::string utc_timestamp()
{
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

/// Short human-readable number for console summaries; files always use format_double.
std::string brief(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

std::uint32_t resolve_jobs(std::uint32_t jobs)
{
    if (jobs > 0) return jobs;
    return std::max(1u, std::thread::hardware_concurrency());
}

HwConfig resolve_hw(const Options& o)
{
    HwConfig h = o.hw.find('=') != std::string::npos ? parse_hw_inline(o.hw) : load_hw_config(o.hw);
    if (!o.precision.empty()) h.precision = parse_precision(o.precision);
    return h;
}

Precision resolve_precision(const Options& o)
{
    return o.precision.empty() ? Precision::int8 : parse_precision(o.precision);
}

DesignSpace resolve_space(const std::string& name)
{
    return name == "full" ? DesignSpace::full() : DesignSpace::reduced();
}

GaSettings ga_settings(const Options& o, double alpha, std::uint64_t seed)
{
    GaSettings s;
    s.generations = o.generations;
    s.population = o.population;
    s.seed = seed;
    s.alpha = alpha;
    s.jobs = resolve_jobs(o.jobs);
    s.space = resolve_space(o.space);
    return s;
}

json ga_json(const GaSettings& s, const std::string& space)
{
    return {{"generations", s.generations}, {"population", s.population},
            {"crossover_prob", s.crossover_prob}, {"eta_c", s.eta_c},
            {"eta_m", s.eta_m}, {"mutation_prob", s.mutation_prob > 0 ? s.mutation_prob : 1.0 / kGeneCount},
            {"space", space}};
}

const std::vector<std::string> kHwColumns = {
    "c_v", "c_h", "t_v_act", "t_h_act", "t_total", "p_side", "bus_inter_cluster", "bus_inter_tile", "bus_intra_tile",
};

std::vector<json> hw_cells(const HwConfig& h)
{
    return {h.c_v, h.c_h, h.t_v_act, h.t_h_act, h.t_total, h.p_side,
            h.bus_inter_cluster, h.bus_inter_tile, h.bus_intra_tile};
}

json evaluation_json(const Evaluation& e)
{
    return {{"genome", e.genome.genes}, {"hw", to_json(e.hw)}, {"cost", e.cost}, {"metrics", to_json(e.metrics)}};
}

/// Everything needed to reproduce a run; `argv` alone is enough for replay.
struct Manifest {
    json j;

    Manifest(const std::string& command, const std::vector<std::string>& args)
    {
        j = {{"command", command},
             {"argv", args},
             {"tool_version", kToolVersion},
             {"timestamp", utc_timestamp()},
             {"working_directory", fs::current_path().string()}};
    }

    void inputs(const Options& o)
    {
        if (!o.model.empty()) j["model_path"] = o.model;
        if (!o.calib.empty()) j["calibration_path"] = o.calib;
        if (!o.hw.empty()) j["hw"] = {{"source", o.hw}, {"inline", o.hw.find('=') != std::string::npos}};
        if (!o.models_dir.empty()) j["models_dir"] = o.models_dir;
    }

    void write(Outputs& outputs)
    {
        auto files = outputs.files();
        files.push_back((outputs.dir() / "manifest.json").string());
        j["output_paths"] = files;
        outputs.json_file("manifest.json", j);
    }
};

json tokens_json(const TokenSetting& t)
{
    return {{"prefill", t.prefill_tokens}, {"decode", t.decode_tokens}, {"batch", TokenSetting::batch}};
}

int cmd_simulate(const Options& o, const std::vector<std::string>& args, std::ostream& out)
{
    const auto m = load_model_config(o.model);
    const auto cal = load_calibration(o.calib);
    const auto h = resolve_hw(o);
    const TokenSetting t{o.prefill, o.decode};
    const auto metrics = simulate_decode(m, h, cal, t);

    Outputs outputs(o.out);
    outputs.json_file("metrics.json", {{"model", m.name},
                                       {"precision", std::string(to_string(h.precision))},
                                       {"hw", to_json(h)},
                                       {"tokens", tokens_json(t)},
                                       {"metrics", to_json(metrics)}});
    Table stages{{"stage", "cycles", "energy_pj", "dram_bytes", "cycle_share"}, {}};
    for (Stage s : kAllStages) {
        const auto& x = metrics.stage(s);
        stages.rows.push_back({std::string(to_string(s)), x.cycles, x.energy_pj, x.dram_bytes,
                               double(x.cycles) / double(metrics.total_cycles)});
    }
    outputs.table("stages", stages, o.format);

    if (o.dump_plans) {
        json steps = json::array();
        std::set<std::uint32_t> tokens{1, t.decode_tokens};
        for (std::uint32_t token : tokens) {
            json plans = json::array();
            for (auto& plan : plan_decode_step(m, h, token, t)) {
                const auto c = price_plan(plan, cal, h);
                auto pj = to_json(plan);
                pj["cost"] = {{"cycles", c.cycles}, {"energy_pj", c.energy_pj}, {"dram_bytes", c.dram_bytes}};
                plans.push_back(std::move(pj));
            }
            steps.push_back({{"token", token}, {"layer_plans", plans}});
        }
        outputs.json_file("plans.json", steps);
    }

    Manifest man("simulate", args);
    man.inputs(o);
    man.j["hw"]["resolved"] = to_json(h);
    man.j["precision"] = to_string(h.precision);
    man.j["tokens"] = tokens_json(t);
    man.j["dump_plans"] = o.dump_plans;
    man.j["format"] = o.format;
    man.write(outputs);

    out << m.name << " " << to_string(h.precision) << ": " << brief(metrics.throughput_tok_s) << " tok/s, "
        << brief(metrics.efficiency_tok_j) << " tok/J, " << brief(metrics.area_mm2) << " mm2\n";
    return kExitOk;
}

std::string history_text(const GaResult& r, const std::string& format)
{
    if (format != "json") {
        std::ostringstream os;
        write_history_csv(os, r);
        return os.str();
    }
    Table t;
    t.header.push_back("generation");
    for (const auto* g : kGeneNames) t.header.push_back(g);
    for (const char* c : {"latency_s", "energy_j", "area_mm2", "cost"}) t.header.push_back(c);
    for (const auto& rec : r.history) {
        std::vector<json> row{rec.generation};
        for (auto g : rec.eval.genome.genes) row.push_back(g);
        row.insert(row.end(), {rec.eval.metrics.latency_s, rec.eval.metrics.energy_j, rec.eval.metrics.area_mm2,
                               rec.eval.cost});
        t.rows.push_back(std::move(row));
    }
    return table_json(t).dump(2) + "\n";
}

int cmd_dse(const Options& o, const std::vector<std::string>& args, std::ostream& out)
{
    const auto m = load_model_config(o.model);
    const auto cal = load_calibration(o.calib);
    const Precision prec = resolve_precision(o);
    const TokenSetting t{o.prefill, o.decode};
    const auto s = ga_settings(o, o.alpha, o.seed);
    const auto r = run_ga(m, cal, t, prec, s);

    Outputs outputs(o.out);
    auto best = evaluation_json(r.best);
    best["best_cost_per_generation"] = r.best_cost;
    outputs.json_file("best.json", best);
    outputs.text(o.format == "json" ? "history.json" : "history.csv", history_text(r, o.format));

    Manifest man("dse", args);
    man.inputs(o);
    man.j["precision"] = to_string(prec);
    man.j["tokens"] = tokens_json(t);
    man.j["alpha"] = o.alpha;
    man.j["seed"] = o.seed;
    man.j["jobs"] = s.jobs;
    man.j["ga"] = ga_json(s, o.space);
    man.j["format"] = o.format;
    man.write(outputs);

    out << "best cost " << brief(r.best.cost) << " at " << to_json(r.best.hw).dump() << "\n";
    return kExitOk;
}

int cmd_exhaustive(const Options& o, const std::vector<std::string>& args, std::ostream& out)
{
    const auto m = load_model_config(o.model);
    const auto cal = load_calibration(o.calib);
    const Precision prec = resolve_precision(o);
    const TokenSetting t{o.prefill, o.decode};
    const auto space = resolve_space(o.space);
    const std::uint32_t jobs = resolve_jobs(o.jobs);
    const auto ranked = exhaustive_search(space, m, cal, t, prec, o.alpha, jobs);

    Outputs outputs(o.out);
    outputs.json_file("best.json", evaluation_json(ranked.front()));
    Table table;
    table.header = {"rank"};
    table.header.insert(table.header.end(), kHwColumns.begin(), kHwColumns.end());
    for (const char* c : {"latency_s", "energy_j", "area_mm2", "cost"}) table.header.push_back(c);
    for (std::size_t i = 0; i < ranked.size(); ++i) {
        const auto& e = ranked[i];
        std::vector<json> row{i + 1};
        for (auto& c : hw_cells(e.hw)) row.push_back(std::move(c));
        row.insert(row.end(), {e.metrics.latency_s, e.metrics.energy_j, e.metrics.area_mm2, e.cost});
        table.rows.push_back(std::move(row));
    }
    outputs.table("ranked", table, o.format);

    Manifest man("exhaustive", args);
    man.inputs(o);
    man.j["precision"] = to_string(prec);
    man.j["tokens"] = tokens_json(t);
    man.j["alpha"] = o.alpha;
    man.j["space"] = o.space;
    man.j["jobs"] = jobs;
    man.j["format"] = o.format;
    man.write(outputs);

    out << ranked.size() << " points; best cost " << brief(ranked.front().cost) << "\n";
    return kExitOk;
}

int cmd_sweep_alpha(const Options& o, const std::vector<std::string>& args, std::ostream& out)
{
    for (double a : o.alphas) {
        if (!(a >= 0.0 && a <= 1.0)) throw ConfigError("--alphas: value " + format_double(a) + " outside [0, 1]");
    }
    const auto m = load_model_config(o.model);
    const auto cal = load_calibration(o.calib);
    const Precision prec = resolve_precision(o);
    const TokenSetting t{o.prefill, o.decode};

    Table table;
    table.header = {"alpha", "run", "seed", "latency_s", "energy_j", "cost", "area_mm2"};
    table.header.insert(table.header.end(), kHwColumns.begin(), kHwColumns.end());
    GaSettings last;
    for (double a : o.alphas) {
        for (std::uint32_t run = 0; run < o.repeats; ++run) {
            // Run r of every alpha shares a seed, so alphas differ only in the objective.
            const std::uint64_t seed = o.seed + run;
            last = ga_settings(o, a, seed);
            const auto r = run_ga(m, cal, t, prec, last);
            std::vector<json> row{a, run + 1, seed, r.best.metrics.latency_s, r.best.metrics.energy_j, r.best.cost,
                                  r.best.metrics.area_mm2};
            for (auto& c : hw_cells(r.best.hw)) row.push_back(std::move(c));
            table.rows.push_back(std::move(row));
        }
    }
    Outputs outputs(o.out);
    outputs.table("sweep_alpha", table, o.format);

    Manifest man("sweep-alpha", args);
    man.inputs(o);
    man.j["precision"] = to_string(prec);
    man.j["tokens"] = tokens_json(t);
    man.j["alphas"] = o.alphas;
    man.j["repeats"] = o.repeats;
    man.j["seed"] = o.seed;
    man.j["run_seeds"] = "seed + run - 1";
    man.j["jobs"] = resolve_jobs(o.jobs);
    man.j["ga"] = ga_json(last, o.space);
    man.j["format"] = o.format;
    man.write(outputs);

    out << table.rows.size() << " runs\n";
    return kExitOk;
}

int cmd_sweep_tokens(const Options& o, const std::vector<std::string>& args, std::ostream& out)
{
    const auto m = load_model_config(o.model);
    const auto cal = load_calibration(o.calib);
    const auto h = resolve_hw(o);

    Table table{{"prefill", "decode", "latency_s", "energy_j", "edp"}, {}};
    for (auto p : o.prefill_grid) {
        for (auto d : o.decode_grid) {
            const auto r = simulate_decode(m, h, cal, TokenSetting{p, d});
            table.rows.push_back({p, d, r.latency_s, r.energy_j, r.latency_s * r.energy_j});
        }
    }
    Outputs outputs(o.out);
    outputs.table("sweep_tokens", table, o.format);

    Manifest man("sweep-tokens", args);
    man.inputs(o);
    man.j["hw"]["resolved"] = to_json(h);
    man.j["precision"] = to_string(h.precision);
    man.j["prefill_grid"] = o.prefill_grid;
    man.j["decode_grid"] = o.decode_grid;
    man.j["format"] = o.format;
    man.write(outputs);

    out << table.rows.size() << " token settings\n";
    return kExitOk;
}

std::vector<fs::path> model_files(const std::string& dir)
{
    std::error_code ec;
    if (!fs::is_directory(dir, ec)) throw IoError("cannot open models directory " + dir);
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw ConfigError("--models: no *.json model configs in " + dir);
    return files;
}

int cmd_bench(const Options& o, const std::vector<std::string>& args, std::ostream& out)
{
    const auto files = model_files(o.models_dir);
    const auto cal = load_calibration(o.calib);
    const TokenSetting t{o.prefill, o.decode};
    const bool fixed_hw = !o.hw.empty();
    std::optional<HwConfig> base;
    if (fixed_hw) base = resolve_hw(o);

    Table table;
    table.header = {"model", "precision", "throughput_tok_s", "efficiency_tok_j", "area_mm2", "latency_s", "energy_j"};
    table.header.insert(table.header.end(), kHwColumns.begin(), kHwColumns.end());
    const auto s = ga_settings(o, o.alpha, o.seed);
    for (const auto& file : files) {
        const auto m = load_model_config(file);
        for (Precision prec : {Precision::int4, Precision::int8}) {
            HwConfig h;
            Metrics r;
            if (fixed_hw) {
                h = *base;
                h.precision = prec;
                r = simulate_decode(m, h, cal, t);
            } else {
                const auto ga = run_ga(m, cal, t, prec, s);
                h = ga.best.hw;
                r = ga.best.metrics;
            }
            std::vector<json> row{m.name, std::string(to_string(prec)), r.throughput_tok_s, r.efficiency_tok_j,
                                  r.area_mm2, r.latency_s, r.energy_j};
            for (auto& c : hw_cells(h)) row.push_back(std::move(c));
            table.rows.push_back(std::move(row));
        }
    }
    Outputs outputs(o.out);
    outputs.table("bench", table, o.format);

    Manifest man("bench", args);
    man.inputs(o);
    std::vector<std::string> names;
    for (const auto& f : files) names.push_back(f.string());
    man.j["model_paths"] = names;
    man.j["tokens"] = tokens_json(t);
    if (fixed_hw) {
        man.j["hw"]["resolved"] = to_json(*base);
    } else {
        man.j["alpha"] = o.alpha;
        man.j["seed"] = o.seed;
        man.j["jobs"] = s.jobs;
        man.j["ga"] = ga_json(s, o.space);
    }
    man.j["format"] = o.format;
    man.write(outputs);

    out << table.rows.size() << " rows\n";
    return kExitOk;
}

int cmd_enumerate(const Options& o, const std::vector<std::string>& args, std::ostream& out)
{
    const auto space = resolve_space(o.space);
    const std::uint64_t n = enumerate_space_size(space);
    out << n << "\n";
    if (o.out.empty()) return kExitOk;

    Outputs outputs(o.out);
    json values = json::object();
    const auto gv = gene_values(space);
    for (std::size_t i = 0; i < kGeneCount; ++i) values[kGeneNames[i]] = gv[i];
    outputs.json_file("space.json", {{"space", o.space}, {"size", n}, {"gene_values", values}});
    Manifest man("enumerate", args);
    man.j["space"] = o.space;
    man.write(outputs);
    return kExitOk;
}

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, int depth);

int cmd_replay(const Options& o, std::ostream& out, std::ostream& err, int depth)
{
    std::ifstream in(o.manifest);
    if (!in) throw IoError("cannot open manifest " + o.manifest);
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw ConfigError("--manifest: parse error: " + std::string(e.what()));
    }
    if (!j.contains("argv") || !j.at("argv").is_array()) throw ConfigError("--manifest: no argv array");
    auto args = j.at("argv").get<std::vector<std::string>>();
    if (!o.out.empty()) {
        bool replaced = false;
        for (std::size_t i = 0; i < args.size(); ++i) {
            if (args[i] == "--out" && i + 1 < args.size()) {
                args[i + 1] = o.out;
                replaced = true;
            } else if (args[i].rfind("--out=", 0) == 0) {
                args[i] = "--out=" + o.out;
                replaced = true;
            }
        }
        if (!replaced) args.insert(args.end(), {"--out", o.out});
    }
    return dispatch(args, out, err, depth + 1);
}

void add_io(CLI::App* sub, Options& o, bool out_required = true)
{
    auto* opt = sub->add_option("--out", o.out, "Output directory");
    if (out_required) opt->required();
    sub->add_option("--format", o.format, "Table format")->check(CLI::IsMember({"csv", "json"}));
}

void add_tokens(CLI::App* sub, Options& o)
{
    sub->add_option("--prefill", o.prefill, "Prompt tokens already in the KV cache")->check(CLI::NonNegativeNumber);
    sub->add_option("--decode", o.decode, "Generated tokens")->check(CLI::PositiveNumber);
}

void add_precision(CLI::App* sub, Options& o)
{
    sub->add_option("--precision", o.precision, "Weight/activation precision")->check(CLI::IsMember({"int4", "int8"}));
}

void add_alpha(CLI::App* sub, Options& o)
{
    sub->add_option("--alpha", o.alpha, "Latency weight in L^alpha * E^(1-alpha)")->check(CLI::Range(0.0, 1.0));
}

void add_ga(CLI::App* sub, Options& o)
{
    sub->add_option("--seed", o.seed, "Seed for all randomness");
    sub->add_option("--jobs", o.jobs, "Worker threads (0 = all cores)");
    sub->add_option("--generations", o.generations, "GA generations")->check(CLI::PositiveNumber);
    sub->add_option("--population", o.population, "GA population")->check(CLI::Range(2u, 100000u));
    sub->add_option("--space", o.space, "Design space")->check(CLI::IsMember({"full", "reduced"}));
}

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, int depth)
{
    if (depth > 1) {
        err << "error: a manifest cannot replay another replay\n";
        return kExitInvalid;
    }
    CLI::App app{"cimsim: analytical CIM decode simulator and design-space explorer", "cimsim"};
    app.set_version_flag("--version", kToolVersion);
    app.require_subcommand(1);
    Options o;

    auto* sim = app.add_subcommand("simulate", "Simulate one model on one hardware config");
    sim->add_option("--model", o.model, "Model config JSON")->required();
    sim->add_option("--hw", o.hw, "Hardware config JSON path or inline k=v,k=v")->required();
    sim->add_option("--calib", o.calib, "Technology calibration JSON")->required();
    add_precision(sim, o);
    add_tokens(sim, o);
    add_io(sim, o);
    sim->add_flag("--dump-plans", o.dump_plans, "Also write plans.json with the mapper's stage plans");

    auto* dse = app.add_subcommand("dse", "Genetic-algorithm search for the best hardware config");
    dse->add_option("--model", o.model, "Model config JSON")->required();
    dse->add_option("--calib", o.calib, "Technology calibration JSON")->required();
    add_precision(dse, o);
    add_tokens(dse, o);
    add_alpha(dse, o);
    add_ga(dse, o);
    add_io(dse, o);

    auto* exh = app.add_subcommand("exhaustive", "Evaluate and rank every point of a design space");
    exh->add_option("--model", o.model, "Model config JSON")->required();
    exh->add_option("--calib", o.calib, "Technology calibration JSON")->required();
    add_precision(exh, o);
    add_tokens(exh, o);
    add_alpha(exh, o);
    exh->add_option("--jobs", o.jobs, "Worker threads (0 = all cores)");
    exh->add_option("--space", o.space, "Design space")->check(CLI::IsMember({"full", "reduced"}));
    add_io(exh, o);

    auto* swa = app.add_subcommand("sweep-alpha", "Repeated GA runs across alpha values");
    swa->add_option("--model", o.model, "Model config JSON")->required();
    swa->add_option("--calib", o.calib, "Technology calibration JSON")->required();
    add_precision(swa, o);
    add_tokens(swa, o);
    swa->add_option("--alphas", o.alphas, "Comma-separated alpha values")->delimiter(',');
    swa->add_option("--repeats", o.repeats, "GA runs per alpha")->check(CLI::PositiveNumber);
    add_ga(swa, o);
    add_io(swa, o);

    auto* swt = app.add_subcommand("sweep-tokens", "Energy-latency product over prefill x decode grids");
    swt->add_option("--model", o.model, "Model config JSON")->required();
    swt->add_option("--hw", o.hw, "Hardware config JSON path or inline k=v,k=v")->required();
    swt->add_option("--calib", o.calib, "Technology calibration JSON")->required();
    add_precision(swt, o);
    swt->add_option("--prefill-grid", o.prefill_grid, "Comma-separated prefill counts")
        ->delimiter(',')
        ->check(CLI::NonNegativeNumber);
    swt->add_option("--decode-grid", o.decode_grid, "Comma-separated decode counts")
        ->delimiter(',')
        ->check(CLI::PositiveNumber);
    add_io(swt, o);

    auto* bench = app.add_subcommand("bench", "Throughput, efficiency and area for every model at INT4 and INT8");
    bench->add_option("--models", o.models_dir, "Directory of model config JSON files")->required();
    bench->add_option("--calib", o.calib, "Technology calibration JSON")->required();
    bench->add_option("--hw", o.hw, "Fixed hardware config; omit to run the GA per model and precision");
    add_tokens(bench, o);
    add_ga(bench, o);
    bench->add_option("--alpha", o.alpha, "Latency weight for the per-model GA (default 1)")
        ->check(CLI::Range(0.0, 1.0));
    add_io(bench, o);

    auto* en = app.add_subcommand("enumerate", "Print the size of a design space");
    en->add_option("--space", o.space, "Design space")->check(CLI::IsMember({"full", "reduced"}));
    add_io(en, o, false);

    auto* replay = app.add_subcommand("replay", "Re-run the command recorded in a manifest.json");
    replay->add_option("--manifest", o.manifest, "manifest.json from an earlier run")->required();
    replay->add_option("--out", o.out, "Output directory (overrides the recorded one)");

    std::vector<const char*> argv{"cimsim"};
    for (const auto& a : args) argv.push_back(a.c_str());
    bool bench_alpha_given = false;
    try {
        app.parse(int(argv.size()), argv.data());
        bench_alpha_given = bench->count("--alpha") > 0;
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::CallForVersion&) {
        out << kToolVersion << "\n";
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kExitInvalid;
    }
    // exhaustive defaults to the reduced space; everything else to the full one.
    if (o.space.empty()) o.space = exh->parsed() ? "reduced" : "full";
    if (bench->parsed() && !bench_alpha_given) o.alpha = 1.0;

    try {
        if (sim->parsed()) return cmd_simulate(o, args, out);
        if (dse->parsed()) return cmd_dse(o, args, out);
        if (exh->parsed()) return cmd_exhaustive(o, args, out);
        if (swa->parsed()) return cmd_sweep_alpha(o, args, out);
        if (swt->parsed()) return cmd_sweep_tokens(o, args, out);
        if (bench->parsed()) return cmd_bench(o, args, out);
        if (en->parsed()) return cmd_enumerate(o, args, out);
        if (replay->parsed()) return cmd_replay(o, out, err, depth);
    } catch (const IoError& e) {
        err << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << "\n";
        return kExitInvalid;
    } catch (const std::length_error& e) {
        err << "error: " << e.what() << "\n";
        return kExitInvalid;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << "\n";
        return kExitInvalid;
    }
    return kExitInvalid;
}

} // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    return dispatch(args, out, err, 0);
}

} // namespace cimsim
