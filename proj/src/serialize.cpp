#include "orthofield/serialize.hpp"

#include <cstdio>
#include <stdexcept>

namespace orthofield {

namespace {

[[noreturn]] void key_error(const std::string& key, const std::string& what) {
    throw std::runtime_error("config key '" + key + "': " + what);
}

int64_t int_at(const OrderedJson& j, const std::string& key) {
    if (!j.is_number_integer()) key_error(key, "expected an integer");
    return j.get<int64_t>();
}

double number_at(const OrderedJson& j, const std::string& key) {
    if (!j.is_number()) key_error(key, "expected a number");
    return j.get<double>();
}

const OrderedJson& field_at(const OrderedJson& doc, const std::string& key) {
    if (!doc.is_object() || !doc.contains(key)) key_error(key, "missing");
    return doc.at(key);
}

std::string fmt(const char* format, double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), format, x);
    return buf;
}

}  // namespace

// --- lattice types ------------------------------------------------------------

OrderedJson to_json(const MultiIndex& i) {
    OrderedJson arr = OrderedJson::array();
    for (int q = 0; q < i.d; ++q) arr.push_back(i[q]);
    return arr;
}

OrderedJson to_json(const DirectionSet& E) {
    OrderedJson arr = OrderedJson::array();
    for (int q = 0; q < E.d; ++q)
        if (E.contains(q)) arr.push_back(q + 1);
    return arr;
}

MultiIndex multi_index_from_json(const OrderedJson& j, const std::string& key) {
    if (!j.is_array() || j.empty() || j.size() > kMaxDim)
        key_error(key, "expected an array of 1 to " + std::to_string(kMaxDim) + " integers");
    MultiIndex i(static_cast<int>(j.size()));
    for (size_t q = 0; q < j.size(); ++q) i[static_cast<int>(q)] = int_at(j[q], key);
    return i;
}

DirectionSet direction_set_from_json(const OrderedJson& j, int d, const std::string& key) {
    if (!j.is_array()) key_error(key, "expected an array of 1-based axis numbers");
    unsigned mask = 0;
    for (const OrderedJson& e : j) {
        const int64_t axis = int_at(e, key);
        if (axis < 1 || axis > d) key_error(key, "axis " + std::to_string(axis) + " out of range");
        const unsigned bit = 1u << (axis - 1);
        if (mask & bit) key_error(key, "duplicate axis " + std::to_string(axis));
        mask |= bit;
    }
    return {d, mask};
}

// --- exact systems --------------------------------------------------------------

OrderedJson to_json(const FiniteSystem& sys) {
    OrderedJson doc;
    doc["d"] = sys.d;
    doc["weights"] = sys.weights;
    doc["perms"] = sys.perms;
    doc["partition"] = sys.base;
    return doc;
}

FiniteSystem system_from_json(const OrderedJson& doc) {
    const int d = static_cast<int>(int_at(field_at(doc, "d"), "d"));

    const OrderedJson& jw = field_at(doc, "weights");
    if (!jw.is_array() || jw.empty()) key_error("weights", "expected a nonempty array");
    std::vector<double> weights;
    for (const OrderedJson& w : jw) weights.push_back(number_at(w, "weights"));
    const size_t n = weights.size();

    const OrderedJson& jp = field_at(doc, "perms");
    if (!jp.is_array() || jp.size() != static_cast<size_t>(d))
        key_error("perms", "expected one permutation per axis");
    std::vector<std::vector<int>> perms;
    for (const OrderedJson& p : jp) {
        if (!p.is_array() || p.size() != n) key_error("perms", "permutation size must match weights");
        std::vector<int> perm;
        for (const OrderedJson& v : p) perm.push_back(static_cast<int>(int_at(v, "perms")));
        perms.push_back(std::move(perm));
    }

    const OrderedJson& jb = field_at(doc, "partition");
    if (!jb.is_array() || jb.size() != n) key_error("partition", "size must match weights");
    Partition base;
    for (const OrderedJson& v : jb) base.push_back(static_cast<int>(int_at(v, "partition")));

    return build_system(d, weights, perms, base);
}

OrderedJson to_json(const PartCertificate& cert) {
    OrderedJson doc;
    doc["measurability_violation"] = cert.measurability_violation;
    doc["projection_violation"] = cert.projection_violation;
    doc["martingale_violation"] = cert.martingale_violation;
    return doc;
}

OrderedJson to_json(const DecompositionParts& dec) {
    OrderedJson doc;
    doc["d"] = dec.d;
    doc["residual"] = dec.residual;
    doc["decomposable"] = dec.decomposable;
    doc["certified"] = dec.certified;
    OrderedJson parts = OrderedJson::array();
    for (unsigned mask = 0; mask < dec.parts.size(); ++mask) {
        OrderedJson entry;
        entry["J"] = to_json(DirectionSet(dec.d, mask));
        entry["values"] = dec.parts[mask];
        if (mask < dec.coboundary_residual.size())
            entry["coboundary_residual"] = dec.coboundary_residual[mask];
        const DirectionSet J(dec.d, mask);
        if (!J.full() && mask < dec.certificates.size())
            entry["certificate"] = to_json(dec.certificates[mask]);
        parts.push_back(std::move(entry));
    }
    doc["parts"] = std::move(parts);
    return doc;
}

// --- field specs ----------------------------------------------------------------

namespace {

const char* law_name(InnovationLaw law) {
    switch (law) {
        case InnovationLaw::StandardNormal: return "normal";
        case InnovationLaw::Rademacher: return "rademacher";
        case InnovationLaw::CenteredUniform: return "uniform";
    }
    return "?";
}

InnovationLaw law_from_name(const std::string& name) {
    if (name == "normal") return InnovationLaw::StandardNormal;
    if (name == "rademacher") return InnovationLaw::Rademacher;
    if (name == "uniform") return InnovationLaw::CenteredUniform;
    key_error("innovation.law", "unknown law '" + name + "' (normal|rademacher|uniform)");
}

}  // namespace

OrderedJson to_json(const LinearFieldSpec& f) {
    OrderedJson doc;
    doc["dimension"] = f.d;
    OrderedJson coeffs = OrderedJson::array();
    for (const auto& [u, a] : f.coeffs) {
        OrderedJson entry;
        entry["index"] = to_json(u);
        entry["value"] = a;
        coeffs.push_back(std::move(entry));
    }
    doc["coefficients"] = std::move(coeffs);
    doc["innovation"] = {{"law", law_name(f.innovation.law)}, {"sd", f.innovation.sd}};
    return doc;
}

LinearFieldSpec linear_field_from_json(const OrderedJson& doc) {
    LinearFieldSpec f;
    f.d = static_cast<int>(int_at(field_at(doc, "dimension"), "dimension"));
    const OrderedJson& jc = field_at(doc, "coefficients");
    if (!jc.is_array() || jc.empty()) key_error("coefficients", "expected a nonempty array");
    for (const OrderedJson& entry : jc) {
        const MultiIndex u = multi_index_from_json(field_at(entry, "index"), "coefficients.index");
        if (u.d != f.d) key_error("coefficients.index", "dimension mismatch");
        f.coeffs[u] = number_at(field_at(entry, "value"), "coefficients.value");
    }
    if (doc.contains("innovation")) {
        const OrderedJson& ji = doc.at("innovation");
        if (ji.contains("law")) {
            if (!ji.at("law").is_string()) key_error("innovation.law", "expected a string");
            f.innovation.law = law_from_name(ji.at("law").get<std::string>());
        }
        if (ji.contains("sd")) f.innovation.sd = number_at(ji.at("sd"), "innovation.sd");
    }
    validate(FieldSpec{f});
    return f;
}

// --- criterion reports -----------------------------------------------------------

OrderedJson to_json(const CriterionReport& rep) {
    OrderedJson doc;
    doc["name"] = rep.name;
    doc["truncation"] = rep.truncation;
    doc["verdict"] = verdict_name(rep.verdict);
    doc["note"] = rep.note;
    OrderedJson rows = OrderedJson::array();
    for (const SeriesRow& row : rep.rows) {
        OrderedJson entry;
        entry["E"] = to_json(row.E);
        entry["partial_sum"] = row.partial_sum;
        entry["tail_bound"] = row.tail_bound;
        entry["sup_constant"] = row.sup_constant;
        rows.push_back(std::move(entry));
    }
    doc["rows"] = std::move(rows);
    return doc;
}

std::string criterion_table(const CriterionReport& rep) {
    std::string out = "criterion: " + rep.name + "\n";
    out += "E          partial_sum           tail_bound            sup_constant\n";
    for (const SeriesRow& row : rep.rows) {
        std::string e = row.E.str();
        e.resize(10, ' ');
        out += e + " " + fmt("%.15e", row.partial_sum) + " " + fmt("%.15e", row.tail_bound) +
               " " + fmt("%.15e", row.sup_constant) + "\n";
    }
    out += "verdict: " + std::string(verdict_name(rep.verdict));
    if (!rep.note.empty()) out += " (" + rep.note + ")";
    out += "\n";
    return out;
}

// --- Monte Carlo reports -----------------------------------------------------------

OrderedJson to_json(const MCEstimate& e) {
    OrderedJson doc;
    doc["mean"] = e.mean;
    doc["std_error"] = e.std_error;
    doc["reps"] = e.reps;
    doc["seed"] = e.seed;
    return doc;
}

OrderedJson to_json(const DoobReport& rep) {
    OrderedJson doc;
    doc["n"] = to_json(rep.n);
    doc["lhs"] = to_json(rep.lhs);
    doc["md_norm"] = rep.md_norm;
    doc["bound"] = rep.bound;
    doc["slack"] = rep.slack;
    doc["pass"] = rep.pass;
    return doc;
}

OrderedJson to_json(const UITable& table) {
    OrderedJson doc;
    OrderedJson ns = OrderedJson::array();
    for (const MultiIndex& n : table.n) ns.push_back(to_json(n));
    doc["n"] = std::move(ns);
    doc["R"] = table.R;
    doc["value"] = table.value;
    return doc;
}

OrderedJson to_json(const ConstantSet& cs) {
    OrderedJson doc;
    doc["d"] = cs.d;
    doc["K"] = cs.K;
    OrderedJson cc = OrderedJson::array();
    for (unsigned mask = 1; mask < cs.C.size(); ++mask) {
        OrderedJson entry;
        entry["J"] = to_json(DirectionSet(cs.d, mask));
        entry["value"] = cs.C[mask];
        cc.push_back(std::move(entry));
    }
    doc["C"] = std::move(cc);
    doc["overall"] = cs.overall;
    return doc;
}

OrderedJson to_json(const DyadicReport& rep) {
    OrderedJson doc;
    doc["E"] = to_json(rep.E);
    doc["constants"] = to_json(rep.constants);
    OrderedJson rows = OrderedJson::array();
    for (const DyadicRow& row : rep.rows) {
        OrderedJson entry;
        entry["exponents"] = to_json(row.exponents);
        entry["n"] = to_json(row.n);
        entry["lhs"] = to_json(row.lhs);
        entry["rhs_middle"] = row.rhs_middle;
        entry["ratio"] = row.ratio;
        rows.push_back(std::move(entry));
    }
    doc["rows"] = std::move(rows);
    doc["series_lower"] = rep.series_lower;
    doc["series_tail"] = rep.series_tail;
    doc["middle_max"] = rep.middle_max;
    doc["ratio_bounded"] = rep.ratio_bounded;
    doc["second_dominates"] = rep.second_dominates;
    doc["pass"] = rep.pass;
    return doc;
}

OrderedJson to_json(const SheetCovReport& rep) {
    OrderedJson doc;
    doc["d"] = rep.d;
    doc["grid"] = rep.grid;
    doc["reps"] = rep.reps;
    OrderedJson rows = OrderedJson::array();
    for (const SheetCovRow& row : rep.rows) {
        OrderedJson entry;
        entry["alpha"] = row.alpha;
        entry["beta"] = row.beta;
        entry["theory"] = row.theory;
        entry["empirical"] = row.empirical;
        entry["z"] = row.z;
        rows.push_back(std::move(entry));
    }
    doc["rows"] = std::move(rows);
    doc["worst_abs_z"] = rep.worst_abs_z;
    doc["pass"] = rep.pass;
    return doc;
}

OrderedJson to_json(const KSReport& rep) {
    OrderedJson doc;
    doc["functional"] = functional_name(rep.functional);
    doc["n"] = to_json(rep.n);
    doc["reps"] = rep.reps;
    doc["seed"] = rep.seed;
    doc["sigma"] = rep.sigma;
    doc["statistic"] = rep.statistic;
    doc["p_value"] = rep.p_value;
    doc["pass"] = rep.pass;
    doc["warning"] = rep.warning;
    return doc;
}

OrderedJson to_json(const CauchyTable& table) {
    OrderedJson doc;
    doc["k"] = table.k;
    doc["coeff"] = table.coeff;
    doc["dist"] = table.dist;
    return doc;
}

// --- CSV ------------------------------------------------------------------------

std::string csv_number(double x) { return OrderedJson(x).dump(); }

std::string profile_csv(const std::vector<ProfilePoint>& points) {
    std::string out = "p,estimate,std_error\n";
    for (const ProfilePoint& pt : points)
        out += std::to_string(pt.p) + "," + csv_number(pt.estimate.mean) + "," +
               csv_number(pt.estimate.std_error) + "\n";
    return out;
}

std::string sweep_csv(const std::string& key,
                      const std::vector<std::pair<int64_t, MCEstimate>>& rows) {
    std::string out = key + ",estimate,std_error\n";
    for (const auto& [value, est] : rows)
        out += std::to_string(value) + "," + csv_number(est.mean) + "," +
               csv_number(est.std_error) + "\n";
    return out;
}

namespace {

std::string geometry(const MultiIndex& n) {
    std::string s;
    for (int q = 0; q < n.d; ++q) s += (q ? "x" : "") + std::to_string(n[q]);
    return s;
}

}  // namespace

std::string ui_csv(const UITable& table) {
    std::string out = "n,R,value\n";
    for (size_t a = 0; a < table.n.size(); ++a)
        for (size_t b = 0; b < table.R.size(); ++b)
            out += geometry(table.n[a]) + "," + csv_number(table.R[b]) + "," +
                   csv_number(table.value[a][b]) + "\n";
    return out;
}

std::string sheet_csv(const SheetPath& path) {
    std::string out;
    for (int q = 1; q <= path.d; ++q) out += "t" + std::to_string(q) + ",";
    out += "value\n";
    const Box pts(zeros(path.d), scaled_ones(path.d, path.grid - 1));
    iterate_box(pts, [&](const MultiIndex& j) {
        for (int q = 0; q < path.d; ++q)
            out += csv_number(static_cast<double>(j[q]) / (path.grid - 1)) + ",";
        out += csv_number(path.at(j)) + "\n";
    });
    return out;
}

}  // namespace orthofield
