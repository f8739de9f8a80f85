#include "iep/iep.hpp"
#include "iep/json_io.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <iterator>
#include <optional>
#include <sstream>
#include <string>

namespace {

using iep::io::json;

enum Exit { kOk = 0, kMalformed = 1, kInfeasible = 2, kExhausted = 3, kNotVerified = 4 };

struct CommandConfig {
    std::string command;
    std::string input = "-";
    std::string output = "-";
    std::string mode = "adaptive";
    long bits = 256;
    std::string cluster_tol;
    uint64_t seed = 1;
    bool float64 = false;
    std::string trace_csv;
    std::string spectrum_path;
    size_t trials = 1000;
    size_t n_max = 6;
    bool bits_given = false;
};

std::string slurp(const std::string& path) {
    if (path == "-") return {std::istreambuf_iterator<char>(std::cin), {}};
    std::ifstream in(path);
    if (!in) throw iep::io::ParseError("cannot open '" + path + "'");
    return {std::istreambuf_iterator<char>(in), {}};
}

void emit(const std::string& path, const std::string& text) {
    if (path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << text;
}

void emit(const CommandConfig& cfg, const json& j) { emit(cfg.output, j.dump(2) + "\n"); }

// parsing precision: enough to hold every decimal string exactly as written
long working_bits(const CommandConfig& cfg, const json& doc) { return std::max(cfg.bits, iep::io::bits_for_digits(doc)); }

// solver precision: --bits if given, else the precision recorded by synth, else the default
long solver_bits(const CommandConfig& cfg, const json& doc) {
    if (!cfg.bits_given && doc.is_object() && doc.contains("precision_bits") && doc.at("precision_bits").is_number_integer())
        return std::max(64L, doc.at("precision_bits").get<long>());
    return cfg.bits;
}

iep::Real cluster_tol_or(const CommandConfig& cfg, const iep::PrecisionConfig& pc) {
    if (cfg.cluster_tol.empty()) return iep::default_cluster_tol(pc);
    iep::Real t;
    try {
        t = iep::Real::parse(cfg.cluster_tol);
    } catch (const std::invalid_argument& e) {
        throw iep::io::ParseError(std::string("--cluster-tol: ") + e.what());
    }
    if (t.sign() <= 0) throw iep::io::ParseError("--cluster-tol: must be positive");
    return t;
}

std::vector<size_t> read_mults(const json& doc) {
    const json& j = doc.contains("spectrum") ? doc.at("spectrum") : doc;
    if (!j.is_object() || !j.contains("mults") || !j.at("mults").is_array())
        throw iep::io::ParseError("missing field 'mults'");
    std::vector<size_t> t;
    const json& a = j.at("mults");
    for (size_t i = 0; i < a.size(); ++i) {
        if (!a[i].is_number_integer() || a[i].get<long>() < 1)
            throw iep::io::ParseError("field 'mults[" + std::to_string(i) + "]': expected a positive integer");
        t.push_back(a[i].get<size_t>());
    }
    if (t.empty()) throw iep::io::ParseError("field 'mults': empty");
    return t;
}

int cmd_feasible(const CommandConfig& cfg) {
    json doc = iep::io::parse_document(slurp(cfg.input));
    iep::TargetSpectrum s;
    s.mults = read_mults(doc);
    auto bad = iep::feasibility_violations(s);
    emit(cfg, json{{"feasible", bad.empty()}, {"violations", bad}});
    return bad.empty() ? kOk : kInfeasible;
}

int cmd_synth(const CommandConfig& cfg) {
    json doc = iep::io::parse_document(slurp(cfg.input));
    iep::TargetSpectrum probe;
    probe.mults = read_mults(doc);
    if (!iep::feasible(probe)) {
        std::cerr << "infeasible: t_i > i at index " << iep::feasibility_violations(probe).front() << "\n";
        return kInfeasible;
    }
    iep::Mode mode;
    if (cfg.mode == "adaptive") mode = iep::Mode::adaptive;
    else if (cfg.mode == "faithful") mode = iep::Mode::faithful;
    else throw iep::io::ParseError("--mode: expected faithful or adaptive");

    const long bits = working_bits(cfg, doc);
    iep::PrecisionScope scope(bits);
    auto in = iep::io::spectrum_from_json(doc);
    auto plan = iep::build_plan(in.spec, in.pinned_masses);
    auto pc = iep::PrecisionConfig::with_bits(bits);
    auto res = iep::synthesize(in.spec, plan, mode, pc);

    auto vcfg = iep::PrecisionConfig::with_bits(res.precision_used);
    auto rep = iep::verify(res.chain, in.spec, plan, vcfg);
    iep::io::Style st{cfg.float64};
    json out = iep::io::synthesis_to_json(res, in.spec, plan, st);
    out["verified"] = rep.all_green();
    emit(cfg, out);
    if (!cfg.trace_csv.empty()) emit(cfg.trace_csv, iep::io::trace_csv(res));
    if (!rep.all_green()) {
        std::cerr << "synthesized chain failed verification\n";
        return kExhausted;
    }
    return kOk;
}

int cmd_analyze(const CommandConfig& cfg) {
    json doc = iep::io::parse_document(slurp(cfg.input));
    const long bits = working_bits(cfg, doc);
    iep::PrecisionScope scope(bits);
    auto c = iep::io::chain_from_json(doc);
    auto pc = iep::PrecisionConfig::with_bits(solver_bits(cfg, doc));
    auto rep = iep::spectrum(c, pc, cluster_tol_or(cfg, pc));
    emit(cfg, iep::io::report_to_json(rep, {cfg.float64}));
    return kOk;
}

json spectrum_doc(const CommandConfig& cfg, const json& doc) {
    if (!cfg.spectrum_path.empty()) return iep::io::parse_document(slurp(cfg.spectrum_path));
    if (!doc.contains("spectrum")) throw iep::io::ParseError("missing field 'spectrum' (or pass --spectrum)");
    return doc;
}

int cmd_verify(const CommandConfig& cfg) {
    json doc = iep::io::parse_document(slurp(cfg.input));
    json sdoc = spectrum_doc(cfg, doc);
    const long bits = std::max(working_bits(cfg, doc), working_bits(cfg, sdoc));
    iep::PrecisionScope scope(bits);
    auto c = iep::io::chain_from_json(doc);
    auto in = iep::io::spectrum_from_json(sdoc);
    if (!iep::feasible(in.spec)) return kInfeasible;
    if (c.n() != in.spec.n()) throw iep::io::ParseError("field 'm': chain length differs from sum of 'mults'");
    auto plan = iep::build_plan(in.spec, in.pinned_masses);
    auto pc = iep::PrecisionConfig::with_bits(solver_bits(cfg, doc));
    std::optional<iep::Real> tol;
    if (!cfg.cluster_tol.empty()) tol = cluster_tol_or(cfg, pc);
    auto rep = iep::verify(c, in.spec, plan, pc, tol);
    emit(cfg, iep::io::verification_to_json(rep, {cfg.float64}));
    return rep.all_green() ? kOk : kNotVerified;
}

int cmd_fuzz(const CommandConfig& cfg) {
    if (cfg.n_max < 1) throw iep::io::ParseError("--n-max: must be >= 1");
    auto pc = iep::PrecisionConfig::with_bits(cfg.bits);
    iep::PrecisionScope scope(cfg.bits);
    std::optional<iep::Real> tol;
    if (!cfg.cluster_tol.empty()) tol = cluster_tol_or(cfg, pc);
    auto sum = iep::necessity_fuzz(cfg.trials, cfg.n_max, cfg.seed, pc, tol);
    emit(cfg, iep::io::fuzz_to_json(sum, cfg.seed, {cfg.float64}));
    return sum.violations == 0 ? kOk : kNotVerified;
}

int cmd_bound5(const CommandConfig& cfg) {
    json doc = iep::io::parse_document(slurp(cfg.input));
    json sdoc = spectrum_doc(cfg, doc);
    const long bits = std::max(working_bits(cfg, doc), working_bits(cfg, sdoc));
    iep::PrecisionScope scope(bits);
    auto c = iep::io::chain_from_json(doc);
    const json& sj = sdoc.contains("spectrum") ? sdoc.at("spectrum") : sdoc;
    auto lambdas = iep::io::read_reals(sj, "lambdas");
    if (c.n() != 5) throw iep::io::ParseError("field 'm': bound5 needs a chain with n = 5");
    if (lambdas.size() != 3) throw iep::io::ParseError("field 'lambdas': bound5 needs three eigenvalues");
    auto b = iep::five_dof_bound(c, lambdas);
    emit(cfg, iep::io::bound5_to_json(b, {cfg.float64}));
    return kOk;
}

int run(const CommandConfig& cfg) {
    try {
        if (cfg.command == "feasible") return cmd_feasible(cfg);
        if (cfg.command == "synth") return cmd_synth(cfg);
        if (cfg.command == "analyze") return cmd_analyze(cfg);
        if (cfg.command == "verify") return cmd_verify(cfg);
        if (cfg.command == "fuzz") return cmd_fuzz(cfg);
        if (cfg.command == "bound5") return cmd_bound5(cfg);
    } catch (const iep::io::ParseError& e) {
        std::cerr << "malformed input: " << e.what() << "\n";
        return kMalformed;
    } catch (const iep::ValidationError& e) {
        std::cerr << "malformed input: " << e.what() << "\n";
        return kMalformed;
    } catch (const iep::InfeasibleSpectrum& e) {
        std::cerr << "infeasible: " << e.what() << "\n";
        return kInfeasible;
    } catch (const iep::PrecisionExhausted& e) {
        std::cerr << "precision exhausted: " << e.what() << "\n";
        return kExhausted;
    } catch (const iep::OverflowError& e) {
        std::cerr << "precision exhausted: " << e.what() << " (needs " << e.required_bits << " bits)\n";
        return kExhausted;
    }
    std::cerr << "unknown command '" << cfg.command << "'\n";
    return kMalformed;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Mass-spring-inerter chain inverse eigenvalue tool"};
    app.require_subcommand(1);
    CommandConfig cfg;

    auto common = [&](CLI::App* sub, bool with_input) {
        if (with_input) sub->add_option("input", cfg.input, "input JSON file, '-' for stdin")->capture_default_str();
        sub->add_option("-o,--output", cfg.output, "output file, '-' for stdout")->capture_default_str();
        sub->add_option("--bits", cfg.bits, "mantissa bits")->capture_default_str()->check(CLI::Range(64L, 1L << 20));
        sub->add_flag("--float64", cfg.float64, "emit numbers as doubles");
    };
    auto* feas = app.add_subcommand("feasible", "check t_i <= i");
    common(feas, true);
    auto* synth = app.add_subcommand("synth", "synthesize a chain for a target spectrum");
    common(synth, true);
    synth->add_option("--mode", cfg.mode, "faithful | adaptive")->capture_default_str();
    synth->add_option("--trace-csv", cfg.trace_csv, "write the step trace as CSV");
    auto* analyze = app.add_subcommand("analyze", "spectrum of a chain");
    common(analyze, true);
    analyze->add_option("--cluster-tol", cfg.cluster_tol, "relative clustering tolerance");
    auto* ver = app.add_subcommand("verify", "certify a chain against a spectrum");
    common(ver, true);
    ver->add_option("--cluster-tol", cfg.cluster_tol, "relative clustering tolerance");
    ver->add_option("--spectrum", cfg.spectrum_path, "spectrum JSON (default: the input's 'spectrum' member)");
    auto* fuzz = app.add_subcommand("fuzz", "random chains, check detected multiplicities");
    common(fuzz, false);
    fuzz->add_option("--seed", cfg.seed, "RNG seed")->capture_default_str();
    fuzz->add_option("--trials", cfg.trials, "number of chains")->capture_default_str();
    fuzz->add_option("--n-max", cfg.n_max, "largest chain size")->capture_default_str();
    fuzz->add_option("--cluster-tol", cfg.cluster_tol, "relative clustering tolerance");
    auto* b5 = app.add_subcommand("bound5", "five-DOF mass-ratio bound");
    common(b5, true);
    b5->add_option("--spectrum", cfg.spectrum_path, "spectrum JSON (default: the input's 'spectrum' member)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : kMalformed;
    }
    auto* sub = app.get_subcommands().front();
    cfg.command = sub->get_name();
    cfg.bits_given = sub->count("--bits") > 0;
    if (cfg.command == "fuzz" && !cfg.bits_given) cfg.bits = 128;
    return run(cfg);
}
