// orthofield: command-line front end for the exact and Monte Carlo toolkit.
//
// Subcommands: check, decompose, approx, inequality (doob|dyadic), fclt,
// sheet.  Every subcommand is a pure function of (config, seed) to output
// bytes; timestamps appear only in the --store log, never in the output.
// Exit codes: 0 success, 1 verdict failure, 2 input error.

#include <cctype>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "orthofield/serialize.hpp"

using namespace orthofield;
namespace fs = std::filesystem;

namespace {

// ---------------------------------------------------------------------------
// common plumbing
// ---------------------------------------------------------------------------

struct Common {
    std::string config_path;
    std::string out_path;
    std::string store_path;
    std::string format = "json";
    uint64_t seed = 0;
    int64_t reps = -1;  // -1: not given; fall back to config, then default
    CLI::App* cmd = nullptr;
    CLI::Option* seed_opt = nullptr;
    CLI::Option* reps_opt = nullptr;
};

void add_common(CLI::App* cmd, Common& c) {
    c.cmd = cmd;
    cmd->add_option("--config", c.config_path, "JSON config file (see --help footer for keys)");
    c.seed_opt = cmd->add_option("--seed", c.seed,
                                 "base RNG seed, uint64 (default 0; env ORTHOFIELD_SEED overrides)");
    c.reps_opt = cmd->add_option("--reps", c.reps, "Monte Carlo replications (overrides config)");
    cmd->add_option("--out", c.out_path, "also write the output bytes to this file");
    cmd->add_option("--store", c.store_path, "append a run record to this JSON-lines store");
    cmd->add_option("--format", c.format, "output format (default json)")
        ->check(CLI::IsMember({"json", "csv", "table"}));
}

struct Outcome {
    OrderedJson output;          // json-format payload
    std::string text;            // final output bytes (any format)
    int exit_code = 0;
    OrderedJson resolved;        // full resolved config for the run record
};

[[noreturn]] void bad_key(const std::string& key, const std::string& what) {
    throw std::runtime_error("config key '" + key + "': " + what);
}

OrderedJson load_config(const std::string& path) {
    if (path.empty()) return OrderedJson::object();
    std::ifstream in(path);
    if (!in) bad_key("--config", "cannot read file " + path);
    OrderedJson doc;
    try {
        in >> doc;
    } catch (const std::exception& e) {
        bad_key("--config", std::string("parse failure: ") + e.what());
    }
    if (!doc.is_object()) bad_key("--config", "top-level value must be an object");
    return doc;
}

uint64_t resolve_seed(const Common& c, const OrderedJson& cfg) {
    if (const char* env = std::getenv("ORTHOFIELD_SEED")) {
        const std::string s(env);
        if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos)
            bad_key("ORTHOFIELD_SEED", "expected a decimal uint64, got '" + s + "'");
        return std::strtoull(s.c_str(), nullptr, 10);
    }
    if (c.seed_opt != nullptr && c.seed_opt->count() > 0) return c.seed;
    if (cfg.contains("seed")) {
        if (!cfg.at("seed").is_number_unsigned() && !cfg.at("seed").is_number_integer())
            bad_key("seed", "expected an unsigned integer");
        return cfg.at("seed").get<uint64_t>();
    }
    return 0;
}

int64_t resolve_reps(const Common& c, const OrderedJson& cfg, int64_t fallback) {
    if (c.reps_opt != nullptr && c.reps_opt->count() > 0) return c.reps;
    if (cfg.contains("reps")) {
        if (!cfg.at("reps").is_number_integer()) bad_key("reps", "expected an integer");
        return cfg.at("reps").get<int64_t>();
    }
    return fallback;
}

LinearFieldSpec field_from_config(const OrderedJson& cfg) {
    if (!cfg.contains("field"))
        bad_key("field", "missing (expected the linear field description)");
    return linear_field_from_json(cfg.at("field"));
}

MultiIndex index_from_list(const std::vector<int64_t>& v, int d, const std::string& key) {
    if (v.size() == 1) return scaled_ones(d, v[0]);
    if (static_cast<int>(v.size()) != d) bad_key(key, "expected 1 or d entries");
    MultiIndex n(d);
    for (int q = 0; q < d; ++q) n[q] = v[static_cast<size_t>(q)];
    return n;
}

std::string iso_utc_now() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// Append-only JSON-lines run store.  Record ids are monotone; a corrupt
// trailing line produces an integrity warning but never blocks the append.
void persist(const std::string& store_path, const std::string& subcommand, const Outcome& o,
             uint64_t seed, const std::string& format, const std::string& out_path) {
    const fs::path p(store_path);
    if (p.has_parent_path()) {
        std::error_code ec;
        if (!fs::exists(p.parent_path(), ec))
            throw std::runtime_error("StoreUnwritable: directory " + p.parent_path().string() +
                                     " does not exist");
    }
    int64_t last_id = 0;
    {
        std::ifstream in(p);
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (line.empty()) continue;
            try {
                const OrderedJson rec = OrderedJson::parse(line);
                if (rec.contains("id") && rec.at("id").is_number_integer())
                    last_id = std::max(last_id, rec.at("id").get<int64_t>());
            } catch (const std::exception&) {
                std::cerr << "warning: store integrity: skipping corrupt record at line "
                          << lineno << "\n";
            }
        }
    }
    std::ofstream out(p, std::ios::app);
    if (!out) throw std::runtime_error("StoreUnwritable: cannot open " + store_path);
    OrderedJson rec;
    rec["id"] = last_id + 1;
    rec["timestamp"] = iso_utc_now();
    rec["subcommand"] = subcommand;
    rec["config"] = o.resolved;
    rec["seed"] = seed;
    rec["format"] = format;
    rec["output"] = format == "json" ? o.output : OrderedJson(o.text);
    rec["artifacts"] = out_path.empty() ? OrderedJson::array() : OrderedJson::array({out_path});
    out << rec.dump() << "\n";
    if (!out) throw std::runtime_error("StoreUnwritable: write to " + store_path + " failed");
}

std::string fmt_line(const char* format, double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), format, x);
    return buf;
}

// ---------------------------------------------------------------------------
// subcommand handlers
// ---------------------------------------------------------------------------

Outcome run_check(const Common& c) {
    const OrderedJson cfg = load_config(c.config_path);
    const LinearFieldSpec f = field_from_config(cfg);
    int64_t trunc = 32;
    if (cfg.contains("truncation")) {
        if (!cfg.at("truncation").is_number_integer()) bad_key("truncation", "expected an integer");
        trunc = cfg.at("truncation").get<int64_t>();
    }
    const CriterionReport hannan = hannan_check(f);
    const CriterionReport mw = mw_check(f, trunc);

    Outcome o;
    o.resolved = {{"field", to_json(f)}, {"truncation", trunc}};
    o.output["field"] = to_json(f);
    o.output["hannan"] = to_json(hannan);
    o.output["mw"] = to_json(mw);
    o.exit_code =
        (hannan.verdict == Verdict::Violated || mw.verdict == Verdict::Violated) ? 1 : 0;
    if (c.format == "table") {
        o.text = criterion_table(hannan) + "\n" + criterion_table(mw);
    } else if (c.format == "csv") {
        o.text = "criterion,E,partial_sum,tail_bound,sup_constant,verdict\n";
        for (const CriterionReport* rep : {&hannan, &mw})
            for (const SeriesRow& row : rep->rows)
                o.text += rep->name + "," + row.E.str() + "," + csv_number(row.partial_sum) +
                          "," + csv_number(row.tail_bound) + "," + csv_number(row.sup_constant) +
                          "," + verdict_name(rep->verdict) + "\n";
    }
    return o;
}

Outcome run_decompose(const Common& c, const std::string& system_path) {
    OrderedJson cfg = load_config(c.config_path);
    if (!system_path.empty()) {
        std::ifstream in(system_path);
        if (!in) bad_key("--system", "cannot read file " + system_path);
        OrderedJson doc;
        try {
            in >> doc;
        } catch (const std::exception& e) {
            bad_key("--system", std::string("parse failure: ") + e.what());
        }
        // either a bare system document or an object with system/function keys
        if (doc.contains("system")) {
            cfg["system"] = doc.at("system");
            if (doc.contains("function")) cfg["function"] = doc.at("function");
        } else {
            cfg["system"] = doc;
        }
    }
    if (!cfg.contains("system")) bad_key("system", "missing (no --system file and no config entry)");
    const FiniteSystem sys = system_from_json(cfg.at("system"));
    if (!cfg.contains("function")) bad_key("function", "missing (one value per atom)");
    const OrderedJson& jf = cfg.at("function");
    if (!jf.is_array() || jf.size() != static_cast<size_t>(sys.n))
        bad_key("function", "expected an array with one number per atom (" +
                                std::to_string(sys.n) + ")");
    FunctionVec f;
    for (const OrderedJson& v : jf) {
        if (!v.is_number()) bad_key("function", "expected numbers");
        f.push_back(v.get<double>());
    }
    DecomposeOptions opts;
    if (cfg.contains("accept_tol")) opts.accept_tol = cfg.at("accept_tol").get<double>();
    if (cfg.contains("cert_tol")) opts.cert_tol = cfg.at("cert_tol").get<double>();

    const DecompositionParts dec = omc_decompose(sys, f, opts);

    Outcome o;
    o.resolved = {{"system", to_json(sys)},
                  {"function", f},
                  {"accept_tol", opts.accept_tol},
                  {"cert_tol", opts.cert_tol}};
    o.output["system"] = to_json(sys);
    o.output["decomposition"] = to_json(dec);
    o.exit_code = (dec.decomposable && dec.certified) ? 0 : 1;
    if (c.format == "table") {
        o.text = "atoms: " + std::to_string(sys.n) + "\n";
        o.text += "residual: " + fmt_line("%.15e", dec.residual) + "\n";
        o.text += std::string("decomposable: ") + (dec.decomposable ? "yes" : "no") + "\n";
        o.text += std::string("certified: ") + (dec.certified ? "yes" : "no") + "\n";
    } else if (c.format == "csv") {
        bad_key("--format", "csv is not defined for decompose (use json or table)");
    }
    return o;
}

Outcome run_approx(const Common& c, const std::vector<int64_t>& k_flags,
                   const std::vector<int64_t>& n_flags) {
    const OrderedJson cfg = load_config(c.config_path);
    const LinearFieldSpec f = field_from_config(cfg);

    std::vector<int64_t> k_list = k_flags;
    if (k_list.empty() && cfg.contains("k_list"))
        k_list = cfg.at("k_list").get<std::vector<int64_t>>();
    if (k_list.empty()) k_list = {1, 2, 4, 8};

    const int64_t reps = resolve_reps(c, cfg, 0);  // 0: no Monte Carlo sweep
    const uint64_t seed = resolve_seed(c, cfg);
    MultiIndex n = scaled_ones(f.d, 64);
    if (!n_flags.empty()) n = index_from_list(n_flags, f.d, "--n");
    else if (cfg.contains("n")) n = multi_index_from_json(cfg.at("n"), "n");
    if (n.d != f.d) bad_key("n", "dimension mismatch with the field");

    const CauchyTable cauchy = cauchy_diagnostics(f, k_list);
    std::vector<std::pair<int64_t, MCEstimate>> errors;
    if (reps > 0)
        for (int64_t k : k_list) errors.emplace_back(k, approx_error(f, k, n, static_cast<int>(reps), seed));

    Outcome o;
    o.resolved = {{"field", to_json(f)}, {"k_list", k_list}, {"n", to_json(n)},
                  {"reps", reps},        {"seed", seed}};
    o.output["field"] = to_json(f);
    o.output["cauchy"] = to_json(cauchy);
    if (reps > 0) {
        OrderedJson errs = OrderedJson::array();
        for (const auto& [k, est] : errors) {
            OrderedJson entry;
            entry["k"] = k;
            entry["error"] = to_json(est);
            errs.push_back(std::move(entry));
        }
        o.output["errors"] = std::move(errs);
        o.output["n"] = to_json(n);
    }
    if (c.format == "csv") {
        if (reps > 0) {
            o.text = sweep_csv("k", errors);
        } else {
            o.text = "k,coeff\n";
            for (size_t i = 0; i < cauchy.k.size(); ++i)
                o.text += std::to_string(cauchy.k[i]) + "," + csv_number(cauchy.coeff[i]) + "\n";
        }
    } else if (c.format == "table") {
        o.text = "k          martingale_coeff";
        if (reps > 0) o.text += "      approx_error          std_error";
        o.text += "\n";
        for (size_t i = 0; i < cauchy.k.size(); ++i) {
            std::string k = std::to_string(cauchy.k[i]);
            k.resize(10, ' ');
            o.text += k + " " + fmt_line("%.15e", cauchy.coeff[i]);
            if (reps > 0)
                o.text += " " + fmt_line("%.15e", errors[i].second.mean) + " " +
                          fmt_line("%.15e", errors[i].second.std_error);
            o.text += "\n";
        }
    }
    return o;
}

Outcome run_doob(const Common& c, int d, const std::vector<int64_t>& n_flags,
                 const std::string& modulation, double sd) {
    const OrderedJson cfg = load_config(c.config_path);
    const int64_t reps = resolve_reps(c, cfg, 2000);
    const uint64_t seed = resolve_seed(c, cfg);

    OrthoMDSpec m;
    m.d = d;
    m.innovation = {InnovationLaw::StandardNormal, sd};
    if (modulation == "sign") m.modulation = Modulation::Sign;
    else if (modulation != "none") bad_key("--modulation", "expected none or sign");

    MultiIndex n = scaled_ones(d, 32);
    if (!n_flags.empty()) n = index_from_list(n_flags, d, "--n");
    else if (cfg.contains("n")) n = multi_index_from_json(cfg.at("n"), "n");
    if (n.d != d) bad_key("--n", "dimension mismatch with --d");

    const DoobReport rep = verify_doob(m, n, static_cast<int>(reps), seed);

    Outcome o;
    o.resolved = {{"d", d},       {"n", to_json(n)},          {"modulation", modulation},
                  {"sd", sd},     {"reps", reps},             {"seed", seed}};
    o.output = to_json(rep);
    o.exit_code = rep.pass ? 0 : 1;
    if (c.format == "table") {
        o.text = "max-norm estimate: " + fmt_line("%.15e", rep.lhs.mean) + " +- " +
                 fmt_line("%.15e", rep.lhs.std_error) + "\n";
        o.text += "bound 2^d ||m||:   " + fmt_line("%.15e", rep.bound) + "\n";
        o.text += std::string("pass: ") + (rep.pass ? "yes" : "no") + "\n";
    } else if (c.format == "csv") {
        o.text = "lhs,std_error,bound,slack,pass\n" + csv_number(rep.lhs.mean) + "," +
                 csv_number(rep.lhs.std_error) + "," + csv_number(rep.bound) + "," +
                 csv_number(rep.slack) + "," + (rep.pass ? "true" : "false") + "\n";
    }
    return o;
}

Outcome run_dyadic(const Common& c, const std::vector<int64_t>& e_flags,
                   const std::vector<int64_t>& expo_flags, double k1, double c1) {
    const OrderedJson cfg = load_config(c.config_path);
    const LinearFieldSpec f = field_from_config(cfg);
    const int64_t reps = resolve_reps(c, cfg, 200);
    const uint64_t seed = resolve_seed(c, cfg);

    DirectionSet E = empty_set(f.d);
    if (!e_flags.empty()) {
        unsigned mask = 0;
        for (int64_t axis : e_flags) {
            if (axis < 1 || axis > f.d) bad_key("--e", "axis out of range");
            mask |= 1u << (axis - 1);
        }
        E = DirectionSet(f.d, mask);
    } else if (cfg.contains("E")) {
        E = direction_set_from_json(cfg.at("E"), f.d, "E");
    }

    MultiIndex expo = scaled_ones(f.d, 3);
    if (!expo_flags.empty()) expo = index_from_list(expo_flags, f.d, "--exponents");
    else if (cfg.contains("exponents")) expo = multi_index_from_json(cfg.at("exponents"), "exponents");

    DyadicConstants base;
    base.K1 = cfg.contains("k1") ? cfg.at("k1").get<double>() : k1;
    base.C1 = cfg.contains("c1") ? cfg.at("c1").get<double>() : c1;

    const DyadicReport rep =
        verify_dyadic_maximal(f, E, expo, static_cast<int>(reps), seed, base);

    Outcome o;
    o.resolved = {{"field", to_json(f)}, {"E", to_json(E)},  {"exponents", to_json(expo)},
                  {"k1", base.K1},       {"c1", base.C1},    {"reps", reps},
                  {"seed", seed}};
    o.output = to_json(rep);
    o.exit_code = rep.pass ? 0 : 1;
    if (c.format == "table") {
        o.text = "E: " + E.str() + "   constant: " + fmt_line("%.6g", rep.constants.overall) + "\n";
        o.text += "n            lhs                   rhs_middle            ratio\n";
        for (const DyadicRow& row : rep.rows) {
            std::string n = row.n.str();
            n.resize(12, ' ');
            o.text += n + " " + fmt_line("%.15e", row.lhs.mean) + " " +
                      fmt_line("%.15e", row.rhs_middle) + " " + fmt_line("%.6g", row.ratio) + "\n";
        }
        o.text += std::string("ratio_bounded: ") + (rep.ratio_bounded ? "yes" : "no") +
                  "  second_dominates: " + (rep.second_dominates ? "yes" : "no") + "\n";
    } else if (c.format == "csv") {
        o.text = "n,lhs,lhs_std_error,rhs_middle,ratio\n";
        for (const DyadicRow& row : rep.rows) {
            std::string geom;
            for (int q = 0; q < row.n.d; ++q) geom += (q ? "x" : "") + std::to_string(row.n[q]);
            o.text += geom + "," + csv_number(row.lhs.mean) + "," +
                      csv_number(row.lhs.std_error) + "," + csv_number(row.rhs_middle) + "," +
                      csv_number(row.ratio) + "\n";
        }
    }
    return o;
}

Outcome run_fclt(const Common& c, const std::vector<int64_t>& n_flags,
                 const std::string& functional) {
    const OrderedJson cfg = load_config(c.config_path);
    const LinearFieldSpec f = field_from_config(cfg);
    const int64_t reps = resolve_reps(c, cfg, 500);
    const uint64_t seed = resolve_seed(c, cfg);

    MultiIndex n = scaled_ones(f.d, 32);
    if (!n_flags.empty()) n = index_from_list(n_flags, f.d, "--n");
    else if (cfg.contains("n")) n = multi_index_from_json(cfg.at("n"), "n");

    PathFunctional fun = PathFunctional::Endpoint;
    if (functional == "supabs") fun = PathFunctional::SupAbs;
    else if (functional != "endpoint") bad_key("--functional", "expected endpoint or supabs");

    const KSReport rep = fclt_ks(f, n, static_cast<int>(reps), fun, seed);

    Outcome o;
    o.resolved = {{"field", to_json(f)},
                  {"n", to_json(n)},
                  {"functional", functional},
                  {"reps", reps},
                  {"seed", seed}};
    o.output = to_json(rep);
    o.exit_code = rep.pass ? 0 : 1;
    if (c.format == "table") {
        o.text = "functional: " + std::string(functional_name(rep.functional)) + "\n";
        o.text += "sigma: " + fmt_line("%.15e", rep.sigma) + "\n";
        o.text += "KS statistic: " + fmt_line("%.15e", rep.statistic) + "\n";
        o.text += "p-value: " + fmt_line("%.15e", rep.p_value) + "\n";
        o.text += std::string("pass: ") + (rep.pass ? "yes" : "no") + "\n";
        if (!rep.warning.empty()) o.text += "warning: " + rep.warning + "\n";
    } else if (c.format == "csv") {
        o.text = "functional,sigma,statistic,p_value,pass\n";
        o.text += std::string(functional_name(rep.functional)) + "," + csv_number(rep.sigma) +
                  "," + csv_number(rep.statistic) + "," + csv_number(rep.p_value) + "," +
                  (rep.pass ? "true" : "false") + "\n";
    }
    return o;
}

Outcome run_sheet(const Common& c, int d, int grid) {
    const OrderedJson cfg = load_config(c.config_path);
    const int64_t reps = resolve_reps(c, cfg, 0);  // 0: emit one sample path
    const uint64_t seed = resolve_seed(c, cfg);

    Outcome o;
    o.resolved = {{"d", d}, {"grid", grid}, {"reps", reps}, {"seed", seed}};
    if (reps > 0) {
        const SheetCovReport rep = sheet_cov_check(d, grid, static_cast<int>(reps), seed);
        o.output = to_json(rep);
        o.exit_code = rep.pass ? 0 : 1;
        if (c.format == "table") {
            o.text = "covariance check on the diagonal grid (worst |z| = " +
                     fmt_line("%.6g", rep.worst_abs_z) + ")\n";
            o.text += "alpha  beta   theory        empirical     z\n";
            for (const SheetCovRow& row : rep.rows)
                o.text += fmt_line("%.2f", row.alpha) + "   " + fmt_line("%.2f", row.beta) +
                          "   " + fmt_line("%.6e", row.theory) + "  " +
                          fmt_line("%.6e", row.empirical) + "  " + fmt_line("%+.3f", row.z) + "\n";
            o.text += std::string("pass: ") + (rep.pass ? "yes" : "no") + "\n";
        } else if (c.format == "csv") {
            o.text = "alpha,beta,theory,empirical,z\n";
            for (const SheetCovRow& row : rep.rows)
                o.text += csv_number(row.alpha) + "," + csv_number(row.beta) + "," +
                          csv_number(row.theory) + "," + csv_number(row.empirical) + "," +
                          csv_number(row.z) + "\n";
        }
    } else {
        const SheetPath path = simulate_sheet(d, grid, seed);
        o.output["d"] = d;
        o.output["grid"] = grid;
        o.output["seed"] = seed;
        o.output["values"] = path.values;
        if (c.format == "csv") o.text = sheet_csv(path);
        else if (c.format == "table") o.text = sheet_csv(path);  // grid dump is the table
    }
    return o;
}

// ---------------------------------------------------------------------------

void emit(const Common& c, const std::string& subcommand, Outcome& o) {
    if (o.text.empty()) o.text = o.output.dump(2) + "\n";
    if (!c.store_path.empty()) {
        const OrderedJson cfg = load_config(c.config_path);
        persist(c.store_path, subcommand, o, resolve_seed(c, cfg), c.format, c.out_path);
    }
    if (!c.out_path.empty()) {
        std::ofstream out(c.out_path, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write --out file " + c.out_path);
        out << o.text;
        if (!out) throw std::runtime_error("write to --out file " + c.out_path + " failed");
    }
    std::cout << o.text;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "orthofield: exact operator algebra and Monte Carlo verification for "
        "stationary random fields"};
    app.require_subcommand(1);

    // check -----------------------------------------------------------------
    Common c_check;
    CLI::App* check = app.add_subcommand(
        "check", "summability criteria (projector sum and weighted projection series)");
    add_common(check, c_check);
    check->footer(
        "config keys:\n"
        "  field.dimension        lattice dimension d, 1..4 (required)\n"
        "  field.coefficients     list of {index: [i1..id], value: a} (required)\n"
        "  field.innovation.law   normal | rademacher | uniform (default normal)\n"
        "  field.innovation.sd    innovation standard deviation (default 1.0)\n"
        "  truncation             per-axis series truncation point (default 32)");

    // decompose ---------------------------------------------------------------
    Common c_dec;
    std::string system_path;
    CLI::App* dec = app.add_subcommand(
        "decompose", "martingale-coboundary decomposition of a finite-system function");
    add_common(dec, c_dec);
    dec->add_option("--system", system_path,
                    "JSON file with the system (bare document or {system, function})");
    dec->footer(
        "config keys:\n"
        "  system.d               lattice dimension\n"
        "  system.weights         atom weights, positive, sum 1\n"
        "  system.perms           one permutation per axis (images of atoms)\n"
        "  system.partition       base partition cell labels, one per atom\n"
        "  function               one value per atom (required)\n"
        "  accept_tol             reconstruction acceptance tolerance (default 1e-9)\n"
        "  cert_tol               certificate tolerance (default 1e-12)");

    // approx -------------------------------------------------------------------
    Common c_approx;
    std::vector<int64_t> approx_k, approx_n;
    CLI::App* approx = app.add_subcommand(
        "approx", "block martingale approximation: coefficients and error sweep");
    add_common(approx, c_approx);
    approx->add_option("--k", approx_k, "block sizes, ascending (default 1,2,4,8)")
        ->delimiter(',');
    approx->add_option("--n", approx_n, "window size, 1 or d entries (default 64 per axis)")
        ->delimiter(',');
    approx->footer(
        "config keys:\n"
        "  field.*                as in `check`\n"
        "  k_list                 block sizes (default [1,2,4,8])\n"
        "  n                      window size per axis (default 64)\n"
        "  reps                   error-sweep replications; 0 skips the sweep (default 0)\n"
        "  seed                   base seed (default 0)");

    // inequality ------------------------------------------------------------------
    CLI::App* ineq = app.add_subcommand("inequality", "maximal-inequality checks");
    ineq->require_subcommand(1);

    Common c_doob;
    int doob_d = 1;
    std::vector<int64_t> doob_n;
    std::string doob_mod = "none";
    double doob_sd = 1.0;
    CLI::App* doob =
        ineq->add_subcommand("doob", "martingale maximal bound for i.i.d.-driven differences");
    add_common(doob, c_doob);
    doob->add_option("--d", doob_d, "lattice dimension (default 1)");
    doob->add_option("--n", doob_n, "window size, 1 or d entries (default 32 per axis)")
        ->delimiter(',');
    doob->add_option("--modulation", doob_mod, "none | sign (default none)");
    doob->add_option("--sd", doob_sd, "innovation standard deviation (default 1.0)");
    doob->footer(
        "config keys: n, reps (default 2000), seed; flags override the config.");

    Common c_dy;
    std::vector<int64_t> dy_e, dy_expo;
    double dy_k1 = 6.0, dy_c1 = 6.0;
    CLI::App* dyadic = ineq->add_subcommand(
        "dyadic", "dyadic maximal inequality on a direction-space field");
    add_common(dyadic, c_dy);
    dyadic->add_option("--e", dy_e, "direction set, 1-based axes (default empty)")->delimiter(',');
    dyadic->add_option("--exponents", dy_expo,
                       "max dyadic exponents, 1 or d entries (default 3 per axis)")
        ->delimiter(',');
    dyadic->add_option("--k1", dy_k1, "base constant K(1) (default 6)");
    dyadic->add_option("--c1", dy_c1, "base constant C(1,{1}) (default 6)");
    dyadic->footer(
        "config keys:\n"
        "  field.*                as in `check`\n"
        "  E                      direction set, 1-based axes (default [])\n"
        "  exponents              max dyadic exponents per axis (default 3)\n"
        "  k1, c1                 recursion base constants (default 6, 6)\n"
        "  reps (default 200), seed");

    // fclt -----------------------------------------------------------------------
    Common c_fclt;
    std::vector<int64_t> fclt_n;
    std::string fclt_fun = "endpoint";
    CLI::App* fclt = app.add_subcommand(
        "fclt", "two-sample comparison of a partial-sum functional with the Brownian sheet");
    add_common(fclt, c_fclt);
    fclt->add_option("--n", fclt_n, "window size, 1 or d entries (default 32 per axis)")
        ->delimiter(',');
    fclt->add_option("--functional", fclt_fun, "endpoint | supabs (default endpoint)");
    fclt->footer(
        "config keys:\n"
        "  field.*                as in `check`\n"
        "  n                      window size per axis (default 32)\n"
        "  reps (default 500), seed");

    // sheet -----------------------------------------------------------------------
    Common c_sheet;
    int sheet_d = 2, sheet_grid = 11;
    CLI::App* sheet = app.add_subcommand(
        "sheet", "Brownian sheet: sample export, or covariance check with --reps");
    add_common(sheet, c_sheet);
    sheet->add_option("--d", sheet_d, "dimension (default 2)");
    sheet->add_option("--grid", sheet_grid,
                      "points per axis; grid-1 divisible by 5 for --reps checks (default 11)");
    sheet->footer(
        "config keys: reps (0 emits one sample path; >0 runs the covariance check), seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        Outcome o;
        std::string name;
        if (check->parsed()) {
            name = "check";
            o = run_check(c_check);
            emit(c_check, name, o);
        } else if (dec->parsed()) {
            name = "decompose";
            o = run_decompose(c_dec, system_path);
            emit(c_dec, name, o);
        } else if (approx->parsed()) {
            name = "approx";
            o = run_approx(c_approx, approx_k, approx_n);
            emit(c_approx, name, o);
        } else if (ineq->parsed() && doob->parsed()) {
            name = "inequality doob";
            o = run_doob(c_doob, doob_d, doob_n, doob_mod, doob_sd);
            emit(c_doob, name, o);
        } else if (ineq->parsed() && dyadic->parsed()) {
            name = "inequality dyadic";
            o = run_dyadic(c_dy, dy_e, dy_expo, dy_k1, dy_c1);
            emit(c_dy, name, o);
        } else if (fclt->parsed()) {
            name = "fclt";
            o = run_fclt(c_fclt, fclt_n, fclt_fun);
            emit(c_fclt, name, o);
        } else if (sheet->parsed()) {
            name = "sheet";
            o = run_sheet(c_sheet, sheet_d, sheet_grid);
            emit(c_sheet, name, o);
        }
        return o.exit_code;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
