#pragma once

#include "iep/chain_model.hpp"
#include "iep/forward_solver.hpp"
#include "iep/spectrum_plan.hpp"
#include "iep/synthesis.hpp"
#include "iep/verifier.hpp"

#include <json.hpp>

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

namespace iep::io {

using nlohmann::json;

struct ParseError : Error {
    using Error::Error;
};

struct Style {
    bool float64 = false;
};

inline json num(const Real& x, const Style& st) {
    if (st.float64) return x.to_double();
    return x.to_string();
}

inline json nums(const std::vector<Real>& xs, const Style& st) {
    json a = json::array();
    for (auto& x : xs) a.push_back(num(x, st));
    return a;
}

inline Real read_real(const json& v, const std::string& field) {
    try {
        if (v.is_string()) return Real::parse(v.get<std::string>());
        if (v.is_number_integer()) return Real(v.get<long>());
        if (v.is_number()) return Real(v.get<double>());
    } catch (const std::invalid_argument& e) {
        throw ParseError("field '" + field + "': " + e.what());
    }
    throw ParseError("field '" + field + "': expected a decimal string");
}

inline std::vector<Real> read_reals(const json& obj, const std::string& key) {
    if (!obj.contains(key)) throw ParseError("missing field '" + key + "'");
    const json& a = obj.at(key);
    if (!a.is_array()) throw ParseError("field '" + key + "': expected an array");
    std::vector<Real> out;
    for (size_t i = 0; i < a.size(); ++i) out.push_back(read_real(a[i], key + "[" + std::to_string(i) + "]"));
    return out;
}

//! Longest digit run among the decimal strings in a document, converted to bits.
inline long bits_for_digits(const json& doc) {
    size_t best = 0;
    auto walk = [&](auto&& self, const json& v) -> void {
        if (v.is_string()) {
            size_t d = 0;
            for (char ch : v.get_ref<const std::string&>()) {
                if (ch == 'e' || ch == 'E') break;
                if (ch >= '0' && ch <= '9') ++d;
            }
            best = std::max(best, d);
        } else if (v.is_structured()) {
            for (auto& x : v) self(self, x);
        }
    };
    walk(walk, doc);
    return static_cast<long>(std::ceil(best * 3.3219280948873623)) + 16;
}

inline json parse_document(const std::string& text) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("malformed JSON: ") + e.what());
    }
}

inline json chain_to_json(const ChainSystem& c, const Style& st = {}) {
    return json{{"n", c.n()}, {"m", nums(c.m, st)}, {"k", nums(c.k, st)}, {"b", nums(c.b, st)}};
}

//! Accepts a bare chain object or any object with a "chain" member.
inline ChainSystem chain_from_json(const json& doc) {
    const json& j = doc.contains("chain") ? doc.at("chain") : doc;
    if (!j.is_object()) throw ParseError("chain: expected an object");
    ChainSystem c;
    c.m = read_reals(j, "m");
    c.k = read_reals(j, "k");
    c.b = read_reals(j, "b");
    if (j.contains("n")) {
        if (!j.at("n").is_number_integer() || j.at("n").get<long>() != static_cast<long>(c.m.size()))
            throw ParseError("field 'n': does not match the length of 'm'");
    }
    auto v = validate(c);
    if (!v.empty()) {
        const Violation& x = v.front();
        std::string where = x.index ? x.field + "[" + std::to_string(x.index - 1) + "]" : x.field;
        throw ParseError("field '" + where + "': " + x.constraint);
    }
    return c;
}

struct SpectrumInput {
    TargetSpectrum spec;
    std::vector<Real> pinned_masses;  // empty when omitted
};

inline json spectrum_to_json(const TargetSpectrum& s, const std::vector<Real>& pinned, const Style& st = {}) {
    json j{{"lambdas", nums(s.lambdas, st)}, {"mults", s.mults}};
    if (!pinned.empty()) j["pinned_masses"] = nums(pinned, st);
    return j;
}

//! Accepts a bare spectrum object or any object with a "spectrum" member.
inline SpectrumInput spectrum_from_json(const json& doc) {
    const json& j = doc.contains("spectrum") ? doc.at("spectrum") : doc;
    if (!j.is_object()) throw ParseError("spectrum: expected an object");
    SpectrumInput in;
    in.spec.lambdas = read_reals(j, "lambdas");
    if (!j.contains("mults") || !j.at("mults").is_array()) throw ParseError("missing field 'mults'");
    const json& t = j.at("mults");
    for (size_t i = 0; i < t.size(); ++i) {
        if (!t[i].is_number_integer() || t[i].get<long>() < 1)
            throw ParseError("field 'mults[" + std::to_string(i) + "]': expected a positive integer");
        in.spec.mults.push_back(t[i].get<size_t>());
    }
    if (j.contains("pinned_masses")) in.pinned_masses = read_reals(j, "pinned_masses");
    try {
        require_well_formed(in.spec);
    } catch (const ValidationError& e) {
        throw ParseError(e.what());
    }
    if (!in.pinned_masses.empty() && in.pinned_masses.size() != in.spec.m())
        throw ParseError("field 'pinned_masses': expected one value per distinct eigenvalue");
    for (size_t l = 0; l < in.pinned_masses.size(); ++l)
        if (in.pinned_masses[l].sign() <= 0) throw ParseError("field 'pinned_masses[" + std::to_string(l) + "]': must be positive");
    return in;
}

inline json report_to_json(const SpectrumReport& r, const Style& st = {}) {
    return json{{"eigenvalues", nums(r.eigenvalues, st)},
                {"multiplicities", r.multiplicities},
                {"residuals", nums(r.residuals, st)},
                {"cluster_tol", num(r.cluster_tol, st)}};
}

inline json roots_json(const RootPoly& p, const Style& st) { return nums(p.roots(), st); }

inline json step_to_json(const StepRecord& r, const Style& st = {}) {
    json j{{"j", r.j},
           {"strategy", r.strategy == Strategy::A ? "A" : "B"},
           {"lambda_star", num(r.lambda_star, st)},
           {"b", num(r.b_next, st)},
           {"m", num(r.m_next, st)},
           {"mu", num(r.pair.mu, st)},
           {"nu", num(r.pair.nu, st)},
           {"F_roots", roots_json(r.F, st)},
           {"G_roots", roots_json(r.G, st)},
           {"D_factors", nums(r.D_factors, st)},
           {"interlacing_ok", r.interlacing_ok},
           {"containment_ok", r.containment_ok}};
    if (r.tau) j["tau"] = num(*r.tau, st);
    if (r.strategy == Strategy::B) j["last_bracket"] = r.last_bracket_widened ? "widened" : "primary";
    if (r.lemma7_ok) j["lemma7_ok"] = *r.lemma7_ok;
    return j;
}

inline json synthesis_to_json(const SynthesisResult& res, const TargetSpectrum& s, const MultiplicityPlan& plan,
                              const Style& st = {}) {
    json trace = json::array();
    for (auto& r : res.trace) trace.push_back(step_to_json(r, st));
    json j{{"chain", chain_to_json(res.chain, st)},
           {"spectrum", spectrum_to_json(s, plan.pinned_masses, st)},
           {"mode", to_string(res.mode)},
           {"precision_bits", res.precision_used},
           {"pinned_indices", plan.pinned_indices},
           {"trace", trace}};
    if (res.mode == Mode::adaptive) j["retries"] = {{"rho_halvings", res.shrinks}, {"ratio_boosts", res.ratio_boosts}};
    if (res.proof_constants) {
        auto& pc = *res.proof_constants;
        j["constants"] = {{"log2_epsilon", pc.log2_epsilon}, {"log2_rho1", pc.log2_rho1}, {"log2_C", pc.log2_C},
                          {"required_bits", pc.required_bits}};
        if (res.inequalities) j["constants"]["inequalities_hold"] = res.inequalities->all();
    }
    return j;
}

inline std::string trace_csv(const SynthesisResult& res) {
    std::ostringstream os;
    os << "j,strategy,lambda_star,b,m,mu_over_nu\n";
    for (auto& r : res.trace)
        os << r.j << ',' << (r.strategy == Strategy::A ? 'A' : 'B') << ',' << r.lambda_star << ',' << r.b_next << ','
           << r.m_next << ',' << (r.pair.mu / r.pair.nu) << '\n';
    return os.str();
}

inline json verification_to_json(const VerificationReport& v, const Style& st = {}) {
    json div = json::array();
    for (auto& d : v.divisibility)
        div.push_back({{"lambda", num(d.lambda, st)}, {"t", d.t}, {"residuals", nums(d.residuals, st)},
                       {"sturm_jump", d.sturm_jump}, {"ok", d.ok}});
    return json{{"all_green", v.all_green()},
                {"divisibility_ok", v.divisibility_ok},
                {"divisibility_residuals", div},
                {"spectrum_match", v.spectrum_match},
                {"eigen_errors", nums(v.eigen_errors, st)},
                {"detected", report_to_json(v.detected, st)},
                {"gcd_degree", v.gcd_degree},
                {"gcd_degree_ok", v.gcd_degree_ok},
                {"pinned_masses_ok", v.pinned_masses_ok},
                {"threshold", num(v.threshold, st)},
                {"cluster_tol", num(v.cluster_tol, st)}};
}

inline json fuzz_to_json(const FuzzSummary& f, uint64_t seed, const Style& st = {}) {
    json ce = json::array();
    for (auto& c : f.counterexamples) ce.push_back({{"chain", chain_to_json(c.chain, st)}, {"multiplicities", c.multiplicities}});
    return json{{"seed", seed},
                {"trials", f.trials},
                {"violations", f.violations},
                {"chains_with_multiple", f.chains_with_multiple},
                {"size_histogram", f.size_histogram},
                {"counterexamples", ce}};
}

inline json bound5_to_json(const FiveDofBound& b, const Style& st = {}) {
    return json{{"lhs", num(b.lhs, st)}, {"rhs", num(b.rhs, st)}, {"holds", b.holds}, {"margin", num(b.margin, st)}};
}

}  // namespace iep::io
