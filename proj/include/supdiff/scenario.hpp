#pragma once

// Scenario files, run reports, and command logic behind the CLI. Scenarios
// are JSON: a family (finite members or a box template with polynomial
// coefficient tables), query points, theorem ids, and options. Reports carry
// every certification field so a run can be audited without re-executing;
// the only nondeterministic bytes live under the "timing" keys.

#include <cmath>
#include <cstddef>
#include <cstdio>
#include <fstream>
#include <future>
#include <initializer_list>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "convex_function.hpp"
#include "family.hpp"
#include "gen_set.hpp"
#include "oracle.hpp"
#include "polyhedron.hpp"
#include "sip.hpp"
#include "theorems.hpp"

namespace supdiff {

using ojson = nlohmann::ordered_json;

inline constexpr const char* kVersion = "supdiff 0.1.0";

struct ScenarioError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SIPSpec {
    Polyhedron box;
    double target_tol = 1e-6;
    std::size_t max_iter = 500;
};

struct Scenario {
    std::string name;
    IndexedFamily family;
    std::size_t dim = 0; // ambient dimension, recomputed from the family on parse
    std::vector<Vec> points;
    std::vector<TheoremId> theorems;
    CertOptions options;
    std::optional<SIPSpec> sip;
    unsigned long seed = 0; // echoed into reports, reserved for generators
};

// ---------------------------------------------------------------------------
// json helpers
// ---------------------------------------------------------------------------

namespace detail {

[[noreturn]] inline void bad_field(const std::string& where, const std::string& what) {
    throw ScenarioError(where + ": " + what);
}

inline void check_keys(const ojson& j, const std::string& where,
                       std::initializer_list<const char*> allowed) {
    if (!j.is_object()) bad_field(where, "expected an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool known = false;
        for (const char* k : allowed)
            if (it.key() == k) { known = true; break; }
        if (!known) bad_field(where, "unknown field \"" + it.key() + "\"");
    }
}

inline const ojson& need(const ojson& j, const std::string& where, const char* key) {
    auto it = j.find(key);
    if (it == j.end()) bad_field(where, std::string("missing field \"") + key + "\"");
    return *it;
}

inline double to_real(const ojson& j, const std::string& where) {
    if (!j.is_number()) bad_field(where, "expected a number");
    return j.get<double>();
}

inline std::string to_str(const ojson& j, const std::string& where) {
    if (!j.is_string()) bad_field(where, "expected a string");
    return j.get<std::string>();
}

inline Vec to_vec(const ojson& j, const std::string& where) {
    if (!j.is_array()) bad_field(where, "expected an array of numbers");
    Vec v;
    for (const auto& e : j) v.push_back(to_real(e, where));
    return v;
}

// JSON has no infinities, reports still need them for empty-set slacks
inline ojson json_real(double v) {
    if (std::isnan(v)) return ojson("nan");
    if (std::isinf(v)) return ojson(v > 0 ? "inf" : "-inf");
    return ojson(v);
}

inline IndexPolynomial parse_poly(const ojson& j, std::size_t arity, const std::string& where) {
    if (j.is_number()) return IndexPolynomial::constant(arity, j.get<double>());
    if (!j.is_array()) bad_field(where, "expected a number or an array of {expo, value} terms");
    IndexPolynomial p;
    p.arity = arity;
    for (const auto& term : j) {
        check_keys(term, where, {"expo", "value"});
        const ojson& ej = need(term, where, "expo");
        if (!ej.is_array() || ej.size() != arity)
            bad_field(where, "expo must list one exponent per index coordinate");
        std::vector<unsigned> expo;
        for (const auto& e : ej) {
            if (!e.is_number_integer() || e.get<long long>() < 0)
                bad_field(where, "exponents must be nonnegative integers");
            expo.push_back(static_cast<unsigned>(e.get<long long>()));
        }
        p.terms.push_back({std::move(expo), to_real(need(term, where, "value"), where)});
    }
    return p;
}

inline ojson poly_to_json(const IndexPolynomial& p) {
    if (p.terms.empty()) return ojson(0.0);
    if (p.terms.size() == 1 && p.is_constant()) return ojson(p.terms.front().value);
    ojson arr = ojson::array();
    for (const auto& t : p.terms) {
        ojson term = ojson::object();
        term["expo"] = t.expo;
        term["value"] = t.value;
        arr.push_back(std::move(term));
    }
    return arr;
}

inline Polyhedron parse_polyhedron(const ojson& j, const std::string& where) {
    check_keys(j, where, {"dim", "rows"});
    const ojson& dj = need(j, where, "dim");
    if (!dj.is_number_integer() || dj.get<long long>() <= 0)
        bad_field(where, "dim must be a positive integer");
    Polyhedron p = Polyhedron::universe(static_cast<std::size_t>(dj.get<long long>()));
    const ojson& rows = need(j, where, "rows");
    if (!rows.is_array()) bad_field(where, "rows must be an array");
    for (const auto& r : rows) {
        check_keys(r, where + ".rows", {"normal", "offset", "strict"});
        Vec normal = to_vec(need(r, where, "normal"), where + ".normal");
        if (normal.size() != p.dim) bad_field(where, "row normal dimension mismatch");
        double offset = to_real(need(r, where, "offset"), where + ".offset");
        bool strict = false;
        if (auto it = r.find("strict"); it != r.end()) {
            if (!it->is_boolean()) bad_field(where, "strict must be a boolean");
            strict = it->get<bool>();
        }
        p.constraints.push_back({std::move(normal), offset, strict});
    }
    return p;
}

inline ojson polyhedron_to_json(const Polyhedron& p) {
    ojson j = ojson::object();
    j["dim"] = p.dim;
    ojson rows = ojson::array();
    for (const auto& c : p.constraints) {
        ojson r = ojson::object();
        r["normal"] = c.normal;
        r["offset"] = c.offset;
        if (c.strict) r["strict"] = true;
        rows.push_back(std::move(r));
    }
    j["rows"] = std::move(rows);
    return j;
}

inline TemplateNode parse_node(const ojson& j, std::size_t arity, const std::string& where) {
    if (!j.is_object()) bad_field(where, "expected a function node object");
    std::string kind = to_str(need(j, where, "kind"), where + ".kind");
    auto polys = [&](const ojson& a, const std::string& w) {
        if (!a.is_array()) bad_field(w, "expected an array of coefficient tables");
        std::vector<IndexPolynomial> out;
        for (const auto& e : a) out.push_back(parse_poly(e, arity, w));
        return out;
    };
    if (kind == "affine") {
        check_keys(j, where, {"kind", "a", "b"});
        return TemplateNode::affine(polys(need(j, where, "a"), where + ".a"),
                                    parse_poly(need(j, where, "b"), arity, where + ".b"));
    }
    if (kind == "quad") {
        check_keys(j, where, {"kind", "Q", "a", "b"});
        const ojson& qj = need(j, where, "Q");
        if (!qj.is_array()) bad_field(where + ".Q", "expected an array of rows");
        std::vector<std::vector<IndexPolynomial>> Q;
        for (const auto& row : qj) Q.push_back(polys(row, where + ".Q"));
        auto a = polys(need(j, where, "a"), where + ".a");
        if (Q.size() != a.size()) bad_field(where, "Q must be square with one row per variable");
        for (const auto& row : Q)
            if (row.size() != a.size()) bad_field(where, "Q must be square");
        return TemplateNode::quad(std::move(Q), std::move(a),
                                  parse_poly(need(j, where, "b"), arity, where + ".b"));
    }
    if (kind == "norm") {
        check_keys(j, where, {"kind", "dim", "norm", "scale"});
        std::string nk = to_str(need(j, where, "norm"), where + ".norm");
        NormKind k = NormKind::Two;
        if (nk == "one") k = NormKind::One;
        else if (nk == "two") k = NormKind::Two;
        else if (nk == "inf") k = NormKind::Inf;
        else bad_field(where + ".norm", "expected one of \"one\", \"two\", \"inf\"");
        const ojson& dj = need(j, where, "dim");
        if (!dj.is_number_integer() || dj.get<long long>() <= 0)
            bad_field(where, "dim must be a positive integer");
        return TemplateNode::norm(static_cast<std::size_t>(dj.get<long long>()), k,
                                  parse_poly(need(j, where, "scale"), arity, where + ".scale"));
    }
    if (kind == "indicator") {
        check_keys(j, where, {"kind", "dim", "rows"});
        const ojson& dj = need(j, where, "dim");
        if (!dj.is_number_integer() || dj.get<long long>() <= 0)
            bad_field(where, "dim must be a positive integer");
        auto dim = static_cast<std::size_t>(dj.get<long long>());
        const ojson& rows = need(j, where, "rows");
        if (!rows.is_array()) bad_field(where + ".rows", "expected an array");
        std::vector<TemplateNode::Row> out;
        for (const auto& r : rows) {
            check_keys(r, where + ".rows", {"normal", "offset", "strict"});
            TemplateNode::Row row;
            row.normal = polys(need(r, where, "normal"), where + ".rows.normal");
            if (row.normal.size() != dim) bad_field(where, "row normal dimension mismatch");
            row.offset = parse_poly(need(r, where, "offset"), arity, where + ".rows.offset");
            if (auto it = r.find("strict"); it != r.end()) {
                if (!it->is_boolean()) bad_field(where, "strict must be a boolean");
                row.strict = it->get<bool>();
            }
            out.push_back(std::move(row));
        }
        return TemplateNode::indicator(dim, std::move(out));
    }
    if (kind == "max" || kind == "sum") {
        check_keys(j, where, {"kind", "children"});
        const ojson& cj = need(j, where, "children");
        if (!cj.is_array() || cj.empty()) bad_field(where, "children must be a nonempty array");
        std::vector<TemplateNode> cs;
        for (std::size_t i = 0; i < cj.size(); ++i)
            cs.push_back(parse_node(cj[i], arity, where + ".children[" + std::to_string(i) + "]"));
        return kind == "max" ? TemplateNode::max_of(std::move(cs))
                             : TemplateNode::sum_of(std::move(cs));
    }
    if (kind == "shifted") {
        check_keys(j, where, {"kind", "child", "translate"});
        TemplateNode child = parse_node(need(j, where, "child"), arity, where + ".child");
        auto tr = polys(need(j, where, "translate"), where + ".translate");
        if (tr.size() != child.dim) bad_field(where, "translate dimension mismatch");
        return TemplateNode::shifted(std::move(child), std::move(tr));
    }
    if (kind == "truncated") {
        check_keys(j, where, {"kind", "child", "floor"});
        TemplateNode child = parse_node(need(j, where, "child"), arity, where + ".child");
        return TemplateNode::truncated(std::move(child),
                                       parse_poly(need(j, where, "floor"), arity, where + ".floor"));
    }
    bad_field(where, "unknown node kind \"" + kind + "\"");
}

inline ojson node_to_json(const TemplateNode& n) {
    ojson j = ojson::object();
    auto polys = [](const std::vector<IndexPolynomial>& ps) {
        ojson a = ojson::array();
        for (const auto& p : ps) a.push_back(poly_to_json(p));
        return a;
    };
    switch (n.kind) {
        case ConvexFunc::Kind::Affine:
            j["kind"] = "affine";
            j["a"] = polys(n.a);
            j["b"] = poly_to_json(n.b);
            return j;
        case ConvexFunc::Kind::Quad: {
            j["kind"] = "quad";
            ojson rows = ojson::array();
            for (const auto& r : n.qrows) rows.push_back(polys(r));
            j["Q"] = std::move(rows);
            j["a"] = polys(n.a);
            j["b"] = poly_to_json(n.b);
            return j;
        }
        case ConvexFunc::Kind::Norm:
            j["kind"] = "norm";
            j["dim"] = n.dim;
            j["norm"] = n.norm_kind == NormKind::One ? "one"
                        : n.norm_kind == NormKind::Two ? "two"
                                                       : "inf";
            j["scale"] = poly_to_json(n.scale);
            return j;
        case ConvexFunc::Kind::Indicator: {
            j["kind"] = "indicator";
            j["dim"] = n.dim;
            ojson rows = ojson::array();
            for (const auto& r : n.rows) {
                ojson row = ojson::object();
                row["normal"] = polys(r.normal);
                row["offset"] = poly_to_json(r.offset);
                if (r.strict) row["strict"] = true;
                rows.push_back(std::move(row));
            }
            j["rows"] = std::move(rows);
            return j;
        }
        case ConvexFunc::Kind::MaxFinite:
        case ConvexFunc::Kind::Sum: {
            j["kind"] = n.kind == ConvexFunc::Kind::MaxFinite ? "max" : "sum";
            ojson cs = ojson::array();
            for (const auto& c : n.children) cs.push_back(node_to_json(c));
            j["children"] = std::move(cs);
            return j;
        }
        case ConvexFunc::Kind::Shifted:
            j["kind"] = "shifted";
            j["child"] = node_to_json(n.children.front());
            j["translate"] = polys(n.translate);
            return j;
        case ConvexFunc::Kind::Truncated:
            j["kind"] = "truncated";
            j["child"] = node_to_json(n.children.front());
            j["floor"] = poly_to_json(n.b);
            return j;
    }
    throw ScenarioError("node_to_json: unhandled node kind");
}

inline ojson func_to_json(const ConvexFunc& f) {
    ojson j = ojson::object();
    switch (f.kind) {
        case ConvexFunc::Kind::Affine:
            j["kind"] = "affine";
            j["a"] = f.a;
            j["b"] = f.b;
            return j;
        case ConvexFunc::Kind::Quad: {
            j["kind"] = "quad";
            ojson rows = ojson::array();
            for (std::size_t i = 0; i < f.dim; ++i) {
                ojson row = ojson::array();
                for (std::size_t k = 0; k < f.dim; ++k) row.push_back(f.Q(i, k));
                rows.push_back(std::move(row));
            }
            j["Q"] = std::move(rows);
            j["a"] = f.a;
            j["b"] = f.b;
            return j;
        }
        case ConvexFunc::Kind::Norm:
            j["kind"] = "norm";
            j["dim"] = f.dim;
            j["norm"] = f.norm_kind == NormKind::One ? "one"
                        : f.norm_kind == NormKind::Two ? "two"
                                                       : "inf";
            j["scale"] = f.scale;
            return j;
        case ConvexFunc::Kind::Indicator:
            j["kind"] = "indicator";
            j["dim"] = f.dim;
            j["rows"] = polyhedron_to_json(f.P)["rows"];
            return j;
        case ConvexFunc::Kind::MaxFinite:
        case ConvexFunc::Kind::Sum: {
            j["kind"] = f.kind == ConvexFunc::Kind::MaxFinite ? "max" : "sum";
            ojson cs = ojson::array();
            for (const auto& c : f.children) cs.push_back(func_to_json(c));
            j["children"] = std::move(cs);
            return j;
        }
        case ConvexFunc::Kind::Shifted:
            j["kind"] = "shifted";
            j["child"] = func_to_json(f.children.front());
            j["translate"] = f.translate;
            return j;
        case ConvexFunc::Kind::Truncated:
            j["kind"] = "truncated";
            j["child"] = func_to_json(f.children.front());
            j["floor"] = f.b;
            return j;
    }
    throw ScenarioError("func_to_json: unhandled node kind");
}

inline ojson genset_to_json(const GenSet& g) {
    ojson j = ojson::object();
    j["dim"] = g.dim;
    j["points"] = g.points;
    j["rays"] = g.rays;
    return j;
}

} // namespace detail

// ---------------------------------------------------------------------------
// scenario parse / serialize
// ---------------------------------------------------------------------------

inline IndexedFamily parse_family(const ojson& j) {
    const std::string where = "family";
    detail::check_keys(j, where, {"index", "members", "template", "domain_hint"});
    const ojson& idx = detail::need(j, where, "index");
    std::string kind = detail::to_str(detail::need(idx, "family.index", "kind"), "family.index.kind");

    IndexedFamily F;
    if (kind == "finite") {
        detail::check_keys(idx, "family.index", {"kind", "labels"});
        const ojson& lj = detail::need(idx, "family.index", "labels");
        if (!lj.is_array() || lj.empty())
            detail::bad_field("family.index.labels", "expected a nonempty array of strings");
        std::vector<std::string> labels;
        for (const auto& l : lj) labels.push_back(detail::to_str(l, "family.index.labels"));
        const ojson& mj = detail::need(j, where, "members");
        if (!mj.is_array()) detail::bad_field("family.members", "expected an array");
        std::vector<ConvexFunc> members;
        for (std::size_t i = 0; i < mj.size(); ++i)
            members.push_back(instantiate(
                detail::parse_node(mj[i], 0, "family.members[" + std::to_string(i) + "]"), Vec{}));
        if (labels.size() != members.size())
            detail::bad_field(where, "one member per label expected");
        F = IndexedFamily::finite(std::move(labels), std::move(members));
    } else if (kind == "box") {
        detail::check_keys(idx, "family.index", {"kind", "lower", "upper", "resolution"});
        Vec lo = detail::to_vec(detail::need(idx, "family.index", "lower"), "family.index.lower");
        Vec hi = detail::to_vec(detail::need(idx, "family.index", "upper"), "family.index.upper");
        int res = 256;
        if (auto it = idx.find("resolution"); it != idx.end()) {
            if (!it->is_number_integer() || it->get<long long>() < 2)
                detail::bad_field("family.index.resolution", "expected an integer >= 2");
            res = static_cast<int>(it->get<long long>());
        }
        TemplateNode t = detail::parse_node(detail::need(j, where, "template"), lo.size(),
                                            "family.template");
        F = IndexedFamily::box(std::move(lo), std::move(hi), std::move(t), res);
        if (j.contains("members"))
            detail::bad_field(where, "box families take a template, not members");
    } else {
        detail::bad_field("family.index.kind", "expected \"finite\" or \"box\"");
    }
    if (auto it = j.find("domain_hint"); it != j.end())
        F.shared_domain_hint = detail::parse_polyhedron(*it, "family.domain_hint");
    return F;
}

inline ojson family_to_json(const IndexedFamily& F) {
    ojson j = ojson::object();
    ojson idx = ojson::object();
    if (F.index_set.kind == IndexSet::Kind::Finite) {
        idx["kind"] = "finite";
        idx["labels"] = F.index_set.labels;
        j["index"] = std::move(idx);
        ojson members = ojson::array();
        for (const auto& m : F.members) members.push_back(detail::func_to_json(m));
        j["members"] = std::move(members);
    } else {
        idx["kind"] = "box";
        idx["lower"] = F.index_set.lower;
        idx["upper"] = F.index_set.upper;
        idx["resolution"] = F.index_set.base_resolution;
        j["index"] = std::move(idx);
        j["template"] = detail::node_to_json(*F.tmpl);
    }
    if (F.shared_domain_hint) j["domain_hint"] = detail::polyhedron_to_json(*F.shared_domain_hint);
    return j;
}

inline Scenario parse_scenario(const ojson& j) {
    detail::check_keys(j, "scenario",
                       {"name", "family", "points", "theorems", "eps0", "eps_grid", "subspaces",
                        "tolerances", "seed", "sip"});
    Scenario s;
    s.name = detail::to_str(detail::need(j, "scenario", "name"), "scenario.name");
    s.family = parse_family(detail::need(j, "scenario", "family"));

    s.dim =
        s.family.member(s.family.index_set.kind == IndexSet::Kind::Finite ? Vec{0.0}
                                                                          : s.family.index_set.lower)
            .dim;
    const std::size_t dim = s.dim;

    if (auto it = j.find("points"); it != j.end()) {
        if (!it->is_array()) detail::bad_field("scenario.points", "expected an array of points");
        for (const auto& p : *it) {
            Vec x = detail::to_vec(p, "scenario.points");
            if (x.size() != dim)
                detail::bad_field("scenario.points", "point dimension does not match the family");
            s.points.push_back(std::move(x));
        }
    }
    if (auto it = j.find("theorems"); it != j.end()) {
        if (!it->is_array()) detail::bad_field("scenario.theorems", "expected an array of ids");
        for (const auto& t : *it) {
            try {
                s.theorems.push_back(theorem_from_name(detail::to_str(t, "scenario.theorems")));
            } catch (const std::invalid_argument& e) {
                detail::bad_field("scenario.theorems", e.what());
            }
        }
    }
    if (auto it = j.find("eps0"); it != j.end()) {
        s.options.eps0 = detail::to_real(*it, "scenario.eps0");
        if (!(s.options.eps0 >= 0.0)) detail::bad_field("scenario.eps0", "must be >= 0");
    }
    if (auto it = j.find("eps_grid"); it != j.end()) {
        if (!it->is_array()) detail::bad_field("scenario.eps_grid", "expected an array");
        for (const auto& e : *it) s.options.eps_grid.push_back(detail::to_real(e, "scenario.eps_grid"));
    }
    if (auto it = j.find("subspaces"); it != j.end()) {
        if (!it->is_array()) detail::bad_field("scenario.subspaces", "expected an array of bases");
        for (const auto& basis : *it) {
            if (!basis.is_array()) detail::bad_field("scenario.subspaces", "each basis is an array");
            std::vector<Vec> vs;
            for (const auto& v : basis) {
                Vec b = detail::to_vec(v, "scenario.subspaces");
                if (b.size() != dim)
                    detail::bad_field("scenario.subspaces", "basis vector dimension mismatch");
                vs.push_back(std::move(b));
            }
            s.options.subspaces.bases.push_back(std::move(vs));
        }
    }
    if (auto it = j.find("tolerances"); it != j.end()) {
        detail::check_keys(*it, "scenario.tolerances", {"inclusion", "oracle_reconstruction"});
        if (auto t = it->find("inclusion"); t != it->end())
            s.options.inclusion_tol = detail::to_real(*t, "scenario.tolerances.inclusion");
        if (auto t = it->find("oracle_reconstruction"); t != it->end())
            s.options.oracle.reconstruction_tol =
                detail::to_real(*t, "scenario.tolerances.oracle_reconstruction");
    }
    if (auto it = j.find("seed"); it != j.end()) {
        if (!it->is_number_integer() || it->get<long long>() < 0)
            detail::bad_field("scenario.seed", "expected a nonnegative integer");
        s.seed = static_cast<unsigned long>(it->get<long long>());
    }
    if (auto it = j.find("sip"); it != j.end()) {
        detail::check_keys(*it, "scenario.sip", {"box", "target_tol", "max_iter"});
        SIPSpec spec;
        spec.box = detail::parse_polyhedron(detail::need(*it, "scenario.sip", "box"),
                                            "scenario.sip.box");
        if (auto t = it->find("target_tol"); t != it->end())
            spec.target_tol = detail::to_real(*t, "scenario.sip.target_tol");
        if (auto t = it->find("max_iter"); t != it->end()) {
            if (!t->is_number_integer() || t->get<long long>() < 1)
                detail::bad_field("scenario.sip.max_iter", "expected a positive integer");
            spec.max_iter = static_cast<std::size_t>(t->get<long long>());
        }
        if (spec.box.dim != dim)
            detail::bad_field("scenario.sip.box", "box dimension does not match the family");
        s.sip = std::move(spec);
    }
    return s;
}

inline ojson scenario_to_json(const Scenario& s) {
    ojson j = ojson::object();
    j["name"] = s.name;
    j["family"] = family_to_json(s.family);
    j["points"] = s.points;
    ojson th = ojson::array();
    for (TheoremId id : s.theorems) th.push_back(theorem_name(id));
    j["theorems"] = std::move(th);
    j["eps0"] = s.options.eps0;
    if (!s.options.eps_grid.empty()) j["eps_grid"] = s.options.eps_grid;
    if (!s.options.subspaces.bases.empty()) j["subspaces"] = s.options.subspaces.bases;
    ojson tol = ojson::object();
    tol["inclusion"] = s.options.inclusion_tol;
    tol["oracle_reconstruction"] = s.options.oracle.reconstruction_tol;
    j["tolerances"] = std::move(tol);
    j["seed"] = s.seed;
    if (s.sip) {
        ojson sj = ojson::object();
        sj["box"] = detail::polyhedron_to_json(s.sip->box);
        sj["target_tol"] = s.sip->target_tol;
        sj["max_iter"] = s.sip->max_iter;
        j["sip"] = std::move(sj);
    }
    return j;
}

inline Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ScenarioError("cannot open scenario file: " + path);
    ojson j;
    try {
        j = ojson::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ScenarioError(path + ": " + e.what());
    }
    try {
        return parse_scenario(j);
    } catch (const ScenarioError& e) {
        throw ScenarioError(path + ": " + e.what());
    }
}

// ---------------------------------------------------------------------------
// run reports
// ---------------------------------------------------------------------------

struct ScenarioReport {
    std::string name;
    unsigned long seed = 0;
    struct Entry {
        Vec point;
        CertReport cert;
    };
    std::vector<Entry> certs;
    struct CrossEntry {
        Vec point;
        CrossValidationReport rep;
    };
    std::vector<CrossEntry> cross;
};

struct SIPRunRecord {
    std::string scenario;
    SIPResult result;
};

struct RunReport {
    std::vector<ScenarioReport> scenarios;
    std::vector<SIPRunRecord> sips;
};

inline ScenarioReport certify_scenario(const Scenario& s) {
    ScenarioReport rep;
    rep.name = s.name;
    rep.seed = s.seed;
    for (const Vec& x : s.points) {
        for (TheoremId id : s.theorems)
            rep.certs.push_back({x, certify(s.family, x, id, s.options)});
        GenSet oracle = oracle_subdiff(s.family, x, s.options.oracle);
        rep.cross.push_back({x, cross_validate(oracle, s.family, x, 200)});
    }
    return rep;
}

inline RunReport run_certify(const std::vector<Scenario>& scenarios, std::size_t jobs = 1) {
    RunReport out;
    out.scenarios.resize(scenarios.size());
    if (jobs <= 1) {
        for (std::size_t i = 0; i < scenarios.size(); ++i)
            out.scenarios[i] = certify_scenario(scenarios[i]);
        return out;
    }
    for (std::size_t base = 0; base < scenarios.size(); base += jobs) {
        std::size_t end = std::min(base + jobs, scenarios.size());
        std::vector<std::future<ScenarioReport>> wave;
        for (std::size_t i = base; i < end; ++i)
            wave.push_back(std::async(std::launch::async,
                                      [&scenarios, i] { return certify_scenario(scenarios[i]); }));
        for (std::size_t i = base; i < end; ++i) out.scenarios[i] = wave[i - base].get();
    }
    return out;
}

// 0 all-pass; 1 when any formula violation; 2 when hypotheses blocked a
// verdict but nothing failed; 3 is reserved for solver non-convergence
inline int report_exit_code(const RunReport& r) {
    bool unmet = false;
    for (const auto& sc : r.scenarios) {
        for (const auto& e : sc.certs) {
            if (e.cert.verdict == CertVerdict::fail) return 1;
            if (e.cert.verdict == CertVerdict::hypothesis_unmet) unmet = true;
        }
        for (const auto& xv : sc.cross)
            if (!xv.rep.pass) return 1;
    }
    return unmet ? 2 : 0;
}

inline ojson report_to_json(const RunReport& r) {
    ojson j = ojson::object();
    ojson env = ojson::object();
    env["version"] = kVersion;
    ojson tols = ojson::object();
    tols["active"] = kTolActive;
    tols["sup"] = kTolSup;
    tols["simplex"] = detail::kSimplexTol;
    tols["domain_eval"] = kDomainEvalTol;
    env["tolerances"] = std::move(tols);
    j["environment"] = std::move(env);

    ojson scs = ojson::array();
    for (const auto& sc : r.scenarios) {
        ojson sj = ojson::object();
        sj["name"] = sc.name;
        sj["seed"] = sc.seed;
        ojson certs = ojson::array();
        for (const auto& e : sc.certs) {
            ojson c = ojson::object();
            c["point"] = e.point;
            c["theorem"] = theorem_name(e.cert.theorem);
            c["verdict"] = verdict_name(e.cert.verdict);
            c["lhs"] = detail::genset_to_json(e.cert.lhs);
            c["rhs"] = detail::genset_to_json(e.cert.rhs);
            c["lhs_in_rhs"] = e.cert.lhs_in_rhs;
            c["lhs_in_rhs_slack"] = detail::json_real(e.cert.lhs_in_rhs_slack);
            c["rhs_in_lhs"] = e.cert.rhs_in_lhs;
            c["rhs_in_lhs_slack"] = detail::json_real(e.cert.rhs_in_lhs_slack);
            c["gap"] = detail::json_real(e.cert.gap);
            c["note"] = e.cert.note;
            ojson hyps = ojson::array();
            for (const auto& h : e.cert.hypotheses) {
                ojson hj = ojson::object();
                hj["name"] = h.name;
                hj["status"] = hyp_status_name(h.status);
                hj["note"] = h.note;
                hyps.push_back(std::move(hj));
            }
            c["hypotheses"] = std::move(hyps);
            ojson timing = ojson::object();
            timing["lhs_seconds"] = e.cert.lhs_seconds;
            timing["rhs_seconds"] = e.cert.rhs_seconds;
            timing["hypotheses_seconds"] = e.cert.hypotheses_seconds;
            c["timing"] = std::move(timing);
            certs.push_back(std::move(c));
        }
        sj["certifications"] = std::move(certs);
        ojson xvs = ojson::array();
        for (const auto& xv : sc.cross) {
            ojson x = ojson::object();
            x["point"] = xv.point;
            x["vertices_checked"] = xv.rep.vertices_checked;
            x["probes_per_vertex"] = xv.rep.probes_per_vertex;
            x["worst_slack"] = detail::json_real(xv.rep.worst_slack);
            x["vertex_checks_pass"] = xv.rep.vertex_checks_pass;
            x["inflated_tested"] = xv.rep.inflated_tested;
            x["inflated_caught"] = xv.rep.inflated_caught;
            x["family_polyhedral"] = xv.rep.family_polyhedral;
            x["pass"] = xv.rep.pass;
            xvs.push_back(std::move(x));
        }
        sj["cross_validation"] = std::move(xvs);
        scs.push_back(std::move(sj));
    }
    j["scenarios"] = std::move(scs);

    if (!r.sips.empty()) {
        ojson sips = ojson::array();
        for (const auto& rec : r.sips) {
            ojson s = ojson::object();
            s["scenario"] = rec.scenario;
            s["status"] = sip_status_name(rec.result.status);
            s["value"] = detail::json_real(rec.result.value);
            s["x_star"] = rec.result.x_star;
            s["iterations"] = rec.result.iterations;
            ojson cuts = ojson::array();
            for (const auto& c : rec.result.cut_history) {
                ojson cj = ojson::object();
                cj["t"] = c.t;
                cj["g"] = c.g;
                cj["offset"] = c.offset;
                if (c.feasibility) cj["feasibility"] = true;
                cuts.push_back(std::move(cj));
            }
            s["cuts"] = std::move(cuts);
            s["lower_bounds"] = rec.result.lower_history;
            s["upper_bounds"] = rec.result.upper_history;
            sips.push_back(std::move(s));
        }
        j["sip"] = std::move(sips);
    }
    return j;
}

// timing keys carry the only run-to-run variance; reports compare equal
// after dropping them
inline ojson report_json_without_timing(ojson j) {
    if (j.contains("scenarios"))
        for (auto& sc : j["scenarios"])
            if (sc.contains("certifications"))
                for (auto& c : sc["certifications"]) c.erase("timing");
    return j;
}

namespace detail {

inline double real_from_json(const ojson& j, const std::string& where) {
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) {
        std::string s = j.get<std::string>();
        if (s == "inf") return std::numeric_limits<double>::infinity();
        if (s == "-inf") return -std::numeric_limits<double>::infinity();
        if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    }
    bad_field(where, "expected a number or \"inf\"/\"-inf\"/\"nan\"");
}

inline GenSet genset_from_json(const ojson& j, const std::string& where) {
    GenSet g;
    g.dim = static_cast<std::size_t>(need(j, where, "dim").get<long long>());
    for (const auto& p : need(j, where, "points")) g.points.push_back(to_vec(p, where));
    for (const auto& r : need(j, where, "rays")) g.rays.push_back(to_vec(r, where));
    return g;
}

inline CertVerdict verdict_from_name(const std::string& s, const std::string& where) {
    for (CertVerdict v : {CertVerdict::pass, CertVerdict::fail, CertVerdict::hypothesis_unmet})
        if (s == verdict_name(v)) return v;
    bad_field(where, "unknown verdict \"" + s + "\"");
}

inline HypStatus hyp_status_from_name(const std::string& s, const std::string& where) {
    for (HypStatus h : {HypStatus::verified, HypStatus::certified_by_construction,
                        HypStatus::unverified, HypStatus::violated})
        if (s == hyp_status_name(h)) return h;
    bad_field(where, "unknown hypothesis status \"" + s + "\"");
}

inline SIPStatus sip_status_from_name(const std::string& s, const std::string& where) {
    for (SIPStatus v : {SIPStatus::Converged, SIPStatus::IterationLimit})
        if (s == sip_status_name(v)) return v;
    bad_field(where, "unknown sip status \"" + s + "\"");
}

} // namespace detail

// inverse of report_to_json, used by the report command and the losslessness
// tests; the environment stamp is regenerated at render time
inline RunReport parse_report(const ojson& j) {
    const std::string where = "report";
    RunReport r;
    for (const auto& sc : detail::need(j, where, "scenarios")) {
        ScenarioReport sr;
        sr.name = detail::to_str(detail::need(sc, where, "name"), where + ".name");
        sr.seed = sc.value("seed", 0ul);
        for (const auto& c : detail::need(sc, where, "certifications")) {
            ScenarioReport::Entry e;
            e.point = detail::to_vec(detail::need(c, where, "point"), where + ".point");
            e.cert.theorem =
                theorem_from_name(detail::to_str(detail::need(c, where, "theorem"), where));
            e.cert.verdict = detail::verdict_from_name(
                detail::to_str(detail::need(c, where, "verdict"), where), where);
            e.cert.lhs = detail::genset_from_json(detail::need(c, where, "lhs"), where + ".lhs");
            e.cert.rhs = detail::genset_from_json(detail::need(c, where, "rhs"), where + ".rhs");
            e.cert.lhs_in_rhs = detail::need(c, where, "lhs_in_rhs").get<bool>();
            e.cert.lhs_in_rhs_slack =
                detail::real_from_json(detail::need(c, where, "lhs_in_rhs_slack"), where);
            e.cert.rhs_in_lhs = detail::need(c, where, "rhs_in_lhs").get<bool>();
            e.cert.rhs_in_lhs_slack =
                detail::real_from_json(detail::need(c, where, "rhs_in_lhs_slack"), where);
            e.cert.gap = detail::real_from_json(detail::need(c, where, "gap"), where);
            e.cert.note = detail::to_str(detail::need(c, where, "note"), where);
            for (const auto& h : detail::need(c, where, "hypotheses")) {
                HypothesisCheck hc;
                hc.name = detail::to_str(detail::need(h, where, "name"), where);
                hc.status = detail::hyp_status_from_name(
                    detail::to_str(detail::need(h, where, "status"), where), where);
                hc.note = detail::to_str(detail::need(h, where, "note"), where);
                e.cert.hypotheses.push_back(std::move(hc));
            }
            if (auto it = c.find("timing"); it != c.end()) {
                e.cert.lhs_seconds = it->value("lhs_seconds", 0.0);
                e.cert.rhs_seconds = it->value("rhs_seconds", 0.0);
                e.cert.hypotheses_seconds = it->value("hypotheses_seconds", 0.0);
            }
            sr.certs.push_back(std::move(e));
        }
        for (const auto& x : detail::need(sc, where, "cross_validation")) {
            ScenarioReport::CrossEntry xe;
            xe.point = detail::to_vec(detail::need(x, where, "point"), where + ".point");
            xe.rep.vertices_checked = detail::need(x, where, "vertices_checked").get<std::size_t>();
            xe.rep.probes_per_vertex =
                detail::need(x, where, "probes_per_vertex").get<std::size_t>();
            xe.rep.worst_slack =
                detail::real_from_json(detail::need(x, where, "worst_slack"), where);
            xe.rep.vertex_checks_pass = detail::need(x, where, "vertex_checks_pass").get<bool>();
            xe.rep.inflated_tested = detail::need(x, where, "inflated_tested").get<std::size_t>();
            xe.rep.inflated_caught = detail::need(x, where, "inflated_caught").get<std::size_t>();
            xe.rep.family_polyhedral = detail::need(x, where, "family_polyhedral").get<bool>();
            xe.rep.pass = detail::need(x, where, "pass").get<bool>();
            sr.cross.push_back(std::move(xe));
        }
        r.scenarios.push_back(std::move(sr));
    }
    if (auto it = j.find("sip"); it != j.end()) {
        for (const auto& s : *it) {
            SIPRunRecord rec;
            rec.scenario = detail::to_str(detail::need(s, where, "scenario"), where);
            rec.result.status = detail::sip_status_from_name(
                detail::to_str(detail::need(s, where, "status"), where), where);
            rec.result.value = detail::real_from_json(detail::need(s, where, "value"), where);
            rec.result.x_star = detail::to_vec(detail::need(s, where, "x_star"), where);
            rec.result.iterations = detail::need(s, where, "iterations").get<std::size_t>();
            for (const auto& c : detail::need(s, where, "cuts")) {
                SIPCut cut;
                cut.t = detail::to_vec(detail::need(c, where, "t"), where);
                cut.g = detail::to_vec(detail::need(c, where, "g"), where);
                cut.offset = detail::real_from_json(detail::need(c, where, "offset"), where);
                cut.feasibility = c.value("feasibility", false);
                rec.result.cut_history.push_back(std::move(cut));
            }
            for (const auto& v : detail::need(s, where, "lower_bounds"))
                rec.result.lower_history.push_back(detail::real_from_json(v, where));
            for (const auto& v : detail::need(s, where, "upper_bounds"))
                rec.result.upper_history.push_back(detail::real_from_json(v, where));
            r.sips.push_back(std::move(rec));
        }
    }
    return r;
}

inline RunReport load_report(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ScenarioError("cannot open report file: " + path);
    ojson j;
    try {
        j = ojson::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ScenarioError(path + ": " + e.what());
    }
    try {
        return parse_report(j);
    } catch (const ScenarioError& e) {
        throw ScenarioError(path + ": " + e.what());
    }
}

namespace detail {

inline std::string format_real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

inline std::string format_vec(const Vec& x) {
    std::string out = "(";
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (i) out += ", ";
        out += format_real(x[i]);
    }
    return out + ")";
}

} // namespace detail

inline std::string report_to_text(const RunReport& r) {
    std::ostringstream out;
    out << kVersion << " report\n";
    std::size_t pass = 0, fail = 0, unmet = 0;
    for (const auto& sc : r.scenarios) {
        out << "scenario " << sc.name << "\n";
        for (const auto& e : sc.certs) {
            out << "  " << detail::format_vec(e.point) << " " << theorem_name(e.cert.theorem)
                << ": " << verdict_name(e.cert.verdict);
            if (e.cert.verdict == CertVerdict::pass) {
                ++pass;
                out << "  gap=" << detail::format_real(e.cert.gap);
            } else if (e.cert.verdict == CertVerdict::fail) {
                ++fail;
                out << "  gap=" << detail::format_real(e.cert.gap);
            } else {
                ++unmet;
            }
            if (!e.cert.note.empty()) out << "  [" << e.cert.note << "]";
            out << "\n";
            for (const auto& h : e.cert.hypotheses)
                if (h.status == HypStatus::violated || h.status == HypStatus::unverified)
                    out << "    " << h.name << ": " << hyp_status_name(h.status)
                        << (h.note.empty() ? "" : " (" + h.note + ")") << "\n";
        }
        for (const auto& xv : sc.cross)
            out << "  cross-validation " << detail::format_vec(xv.point) << ": "
                << (xv.rep.pass ? "pass" : "FAIL") << " (" << xv.rep.vertices_checked
                << " vertices, worst slack " << detail::format_real(xv.rep.worst_slack) << ")\n";
    }
    for (const auto& rec : r.sips) {
        out << "sip " << rec.scenario << ": " << sip_status_name(rec.result.status)
            << "  value=" << detail::format_real(rec.result.value)
            << "  x*=" << detail::format_vec(rec.result.x_star) << "  iterations="
            << rec.result.iterations << "\n";
    }
    out << "summary: " << (pass + fail + unmet) << " certifications, " << pass << " PASS, " << fail
        << " FAIL, " << unmet << " HYPOTHESIS-UNMET\n";
    return out.str();
}

// ---------------------------------------------------------------------------
// commands
// ---------------------------------------------------------------------------

struct CmdOutcome {
    int exit_code = 0;
    std::string text;
};

namespace detail {

inline void require_point_dim(const Scenario& s, const Vec& x) {
    if (x.size() != s.dim)
        throw ScenarioError("--point: expected " + std::to_string(s.dim) +
                            " coordinates, got " + std::to_string(x.size()));
}

} // namespace detail

inline CmdOutcome cmd_eval(const Scenario& s, const Vec& x, std::optional<double> eps0 = {}) {
    detail::require_point_dim(s, x);
    std::ostringstream out;
    ExtReal fx = sup_eval(s.family, x);
    out << "f" << detail::format_vec(x) << " = ";
    if (fx.is_pos_inf()) out << "+inf";
    else if (fx.is_neg_inf()) out << "-inf";
    else out << detail::format_real(fx.v);
    out << "\n";
    if (!fx.is_finite()) {
        out << "active set: undefined\n";
        return {1, out.str()};
    }
    const double e0 = eps0 ? *eps0 : s.options.eps0;
    std::vector<double> levels{0.0};
    if (e0 > 0.0) levels.push_back(e0);
    for (double e : levels) {
        ActiveSet as = active_set(s.family, x, e);
        out << "T_" << detail::format_real(e) << "(x): ";
        if (as.finite) {
            out << "{";
            for (std::size_t i = 0; i < as.labels.size(); ++i) {
                if (i) out << ", ";
                out << s.family.index_set.labels[as.labels[i]];
            }
            out << "}";
        } else {
            for (std::size_t i = 0; i < as.cover.size(); ++i) {
                if (i) out << " u ";
                for (std::size_t k = 0; k < as.cover[i].lo.size(); ++k) {
                    if (k) out << "x";
                    out << "[" << detail::format_real(as.cover[i].lo[k]) << ", "
                        << detail::format_real(as.cover[i].hi[k]) << "]";
                }
            }
        }
        out << "\n";
    }
    return {0, out.str()};
}

inline CmdOutcome cmd_active_set(const Scenario& s, const Vec& x, std::optional<double> eps0 = {}) {
    CmdOutcome full = cmd_eval(s, x, eps0);
    std::size_t cut = full.text.find('\n');
    return {full.exit_code, full.text.substr(cut + 1)};
}

inline CmdOutcome cmd_subdiff(const Scenario& s, const Vec& x,
                              std::optional<TheoremId> theorem = {}) {
    detail::require_point_dim(s, x);
    GenSet g = theorem ? build_rhs(s.family, x, *theorem, s.options)
                       : oracle_subdiff(s.family, x, s.options.oracle);
    ojson j = detail::genset_to_json(g);
    j["source"] = theorem ? theorem_name(*theorem) : "oracle";
    return {0, j.dump(2) + "\n"};
}

struct CertifyOutcome {
    RunReport report;
    int exit_code = 0;
};

inline CertifyOutcome cmd_certify(const std::vector<Scenario>& scenarios, std::size_t jobs = 1) {
    CertifyOutcome out;
    out.report = run_certify(scenarios, jobs);
    out.exit_code = report_exit_code(out.report);
    return out;
}

struct SIPOutcome {
    SIPResult result;
    int exit_code = 0;
    std::string text;
};

inline SIPOutcome cmd_sip(const Scenario& s) {
    if (!s.sip) throw ScenarioError("scenario \"" + s.name + "\" has no sip block");
    SIPProblem P{s.family, s.sip->box, s.sip->target_tol};
    SIPOutcome out;
    out.result = solve(P, s.sip->max_iter);
    out.exit_code = out.result.status == SIPStatus::Converged ? 0 : 3;
    std::ostringstream text;
    text << "status: " << sip_status_name(out.result.status) << "\n"
         << "value: " << detail::format_real(out.result.value) << "\n"
         << "x*: " << detail::format_vec(out.result.x_star) << "\n"
         << "iterations: " << out.result.iterations << "\n"
         << "cuts: " << out.result.cut_history.size() << "\n";
    out.text = text.str();
    return out;
}

} // namespace supdiff
