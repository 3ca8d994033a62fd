#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "steerhier/assemblage.hpp"
#include "steerhier/moment.hpp"
#include "steerhier/reductions.hpp"
#include "steerhier/sdp_bridge.hpp"
#include "steerhier/version.hpp"

// JSON formats (all carry "format": 1):
//   assemblage              blocks keyed by outcome tuple a (labels 0..|A|-1),
//                           input tuple x (labels 1..|X|) and y (1..|Y|)
//   instrumental-assemblage blocks keyed by (a, x)
//   steering-functional     Hermitian coefficient blocks, same keys as blocks
//   certificate             class representatives as canonical word strings
//                           with d x d blocks; flavor moment | jmrw | npa | dual
//   verdict                 machine-readable outcome record
// Matrices are stored as row-major "re"/"im" arrays. Schema files live under
// schemas/.

namespace steerhier::io {

using nlohmann::json;

inline json to_json(const MatrixXcd& m) {
    json re = json::array(), im = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json rrow = json::array(), irow = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            rrow.push_back(m(i, j).real());
            irow.push_back(m(i, j).imag());
        }
        re.push_back(std::move(rrow));
        im.push_back(std::move(irow));
    }
    return json{{"re", std::move(re)}, {"im", std::move(im)}};
}

inline MatrixXcd matrix_from_json(const json& j) {
    const auto& re = j.at("re");
    const auto& im = j.at("im");
    if (re.size() != im.size() || re.empty()) throw std::invalid_argument("matrix: re/im shape mismatch");
    MatrixXcd m(re.size(), re[0].size());
    for (size_t r = 0; r < re.size(); ++r) {
        if (re[r].size() != static_cast<size_t>(m.cols()) || im[r].size() != static_cast<size_t>(m.cols()))
            throw std::invalid_argument("matrix: ragged rows");
        for (size_t c = 0; c < re[r].size(); ++c) m(r, c) = complexd(re[r][c].get<double>(), im[r][c].get<double>());
    }
    return m;
}

inline json to_json(const ScenarioSpec& s) {
    return json{{"n_alices", s.n_alices},
                {"n_outcomes", s.n_outcomes},
                {"n_inputs", s.n_inputs},
                {"n_bob_inputs", s.n_bob_inputs},
                {"bob_dim", s.bob_dim}};
}

inline ScenarioSpec scenario_from_json(const json& j) {
    ScenarioSpec s;
    s.n_alices = j.at("n_alices").get<int>();
    s.n_outcomes = j.at("n_outcomes").get<int>();
    s.n_inputs = j.at("n_inputs").get<int>();
    s.n_bob_inputs = j.at("n_bob_inputs").get<int>();
    s.bob_dim = j.at("bob_dim").get<int>();
    s.check();
    return s;
}

inline void require_format(const json& j, const char* kind) {
    if (j.value("format", 0) != 1)
        throw std::invalid_argument(std::string(kind) + ": unsupported or missing \"format\" (expected 1)");
    if (j.contains("kind") && j.at("kind").get<std::string>() != kind)
        throw std::invalid_argument(std::string("expected kind \"") + kind + "\", found \"" +
                                    j.at("kind").get<std::string>() + "\"");
}

// ---- assemblage ----

inline json to_json(const Assemblage& a) {
    const auto& s = a.scenario;
    json blocks = json::array();
    for (int af = 0; af < s.outcome_tuples(); ++af)
        for (int xf = 0; xf < s.input_tuples(); ++xf)
            for (int y = 0; y < s.n_bob_inputs; ++y) {
                json b = to_json(a.block(af, xf, y));
                b["a"] = unflatten_tuple(af, s.n_outcomes, s.n_alices);
                auto xt = unflatten_tuple(xf, s.n_inputs, s.n_alices);
                for (auto& v : xt) ++v;
                b["x"] = xt;
                b["y"] = y + 1;
                blocks.push_back(std::move(b));
            }
    return json{{"format", 1}, {"kind", "assemblage"}, {"scenario", to_json(s)}, {"blocks", std::move(blocks)}};
}

inline Assemblage assemblage_from_json(const json& j) {
    require_format(j, "assemblage");
    Assemblage a(scenario_from_json(j.at("scenario")));
    const auto& s = a.scenario;
    std::vector<bool> seen(a.blocks.size(), false);
    for (const auto& b : j.at("blocks")) {
        auto at = b.at("a").get<std::vector<int>>();
        auto xt = b.at("x").get<std::vector<int>>();
        int y = b.at("y").get<int>();
        if (static_cast<int>(at.size()) != s.n_alices || static_cast<int>(xt.size()) != s.n_alices)
            throw std::invalid_argument("assemblage: tuple length mismatch");
        for (int v : at)
            if (v < 0 || v >= s.n_outcomes) throw std::invalid_argument("assemblage: outcome out of range");
        for (auto& v : xt) {
            if (v < 1 || v > s.n_inputs) throw std::invalid_argument("assemblage: input out of range");
            --v;
        }
        if (y < 1 || y > s.n_bob_inputs) throw std::invalid_argument("assemblage: bob input out of range");
        MatrixXcd m = matrix_from_json(b);
        if (m.rows() != s.bob_dim || m.cols() != s.bob_dim)
            throw std::invalid_argument("assemblage: block dimension mismatch");
        size_t idx = a.flat(flatten_tuple(at, s.n_outcomes), flatten_tuple(xt, s.n_inputs), y - 1);
        a.blocks[idx] = std::move(m);
        seen[idx] = true;
    }
    for (bool v : seen)
        if (!v) throw std::invalid_argument("assemblage: missing blocks");
    return a;
}

// ---- instrumental assemblage ----

inline json to_json(const InstrumentalAssemblage& ia) {
    json blocks = json::array();
    for (int a = 0; a < ia.scenario.n_outcomes; ++a)
        for (int x = 0; x < ia.scenario.n_inputs; ++x) {
            json b = to_json(ia.block(a, x));
            b["a"] = a;
            b["x"] = x + 1;
            blocks.push_back(std::move(b));
        }
    return json{{"format", 1},
                {"kind", "instrumental-assemblage"},
                {"scenario", to_json(ia.scenario)},
                {"blocks", std::move(blocks)}};
}

inline InstrumentalAssemblage instrumental_from_json(const json& j) {
    require_format(j, "instrumental-assemblage");
    InstrumentalAssemblage ia(scenario_from_json(j.at("scenario")));
    for (const auto& b : j.at("blocks")) {
        int a = b.at("a").get<int>(), x = b.at("x").get<int>();
        if (a < 0 || a >= ia.scenario.n_outcomes || x < 1 || x > ia.scenario.n_inputs)
            throw std::invalid_argument("instrumental-assemblage: index out of range");
        ia.block(a, x - 1) = matrix_from_json(b);
    }
    return ia;
}

// ---- steering functional ----

inline json to_json(const SteeringFunctional& f) {
    const auto& s = f.scenario;
    json coeffs = json::array();
    for (int af = 0; af < s.outcome_tuples(); ++af)
        for (int xf = 0; xf < s.input_tuples(); ++xf)
            for (int y = 0; y < s.n_bob_inputs; ++y) {
                json b = to_json(f.coeff(af, xf, y));
                b["a"] = unflatten_tuple(af, s.n_outcomes, s.n_alices);
                auto xt = unflatten_tuple(xf, s.n_inputs, s.n_alices);
                for (auto& v : xt) ++v;
                b["x"] = xt;
                b["y"] = y + 1;
                coeffs.push_back(std::move(b));
            }
    return json{
        {"format", 1}, {"kind", "steering-functional"}, {"scenario", to_json(s)}, {"coefficients", std::move(coeffs)}};
}

inline SteeringFunctional functional_from_json(const json& j) {
    require_format(j, "steering-functional");
    SteeringFunctional f(scenario_from_json(j.at("scenario")));
    const auto& s = f.scenario;
    for (const auto& b : j.at("coefficients")) {
        auto at = b.at("a").get<std::vector<int>>();
        auto xt = b.at("x").get<std::vector<int>>();
        for (auto& v : xt) --v;
        int y = b.at("y").get<int>() - 1;
        f.coeff(flatten_tuple(at, s.n_outcomes), flatten_tuple(xt, s.n_inputs), y) = matrix_from_json(b);
    }
    return f;
}

// ---- certificates ----

inline json to_json(const NumericMomentMatrix& m, const std::string& flavor = "moment") {
    const auto& idx = m.index;
    json classes = json::array();
    for (int c = 0; c < idx.class_count(); ++c) {
        json entry = to_json(m.class_blocks[c]);
        entry["word"] = to_string(idx.class_reps[c], idx.scenario);
        classes.push_back(std::move(entry));
    }
    return json{{"format", 1},
                {"kind", "certificate"},
                {"flavor", flavor},
                {"scenario", to_json(idx.scenario)},
                {"level", idx.level},
                {"alphabet", idx.mode == AlphabetMode::full ? "full" : "measurement_only"},
                {"classes", std::move(classes)}};
}

inline json to_json(const JmrwMatrix& delta) { return to_json(delta.blocks, "jmrw"); }

inline NumericMomentMatrix moment_matrix_from_json(const json& j) {
    require_format(j, "certificate");
    std::string flavor = j.value("flavor", "moment");
    if (flavor != "moment" && flavor != "jmrw")
        throw std::invalid_argument("certificate: flavor \"" + flavor + "\" does not hold a block moment matrix");
    ScenarioSpec s = scenario_from_json(j.at("scenario"));
    AlphabetMode mode =
        j.value("alphabet", "full") == "measurement_only" ? AlphabetMode::measurement_only : AlphabetMode::full;
    NumericMomentMatrix m(build_index(s, j.at("level").get<int>(), mode));
    std::vector<bool> seen(m.index.class_count(), false);
    for (const auto& entry : j.at("classes")) {
        Word w = parse_word(entry.at("word").get<std::string>(), s);
        auto [cid, dag] = m.index.class_of_word(w);
        if (cid < 0) throw std::invalid_argument("certificate: unknown class word " + entry.at("word").get<std::string>());
        MatrixXcd value = matrix_from_json(entry);
        if (value.rows() != s.bob_dim) throw std::invalid_argument("certificate: block dimension mismatch");
        m.class_blocks[cid] = dag ? MatrixXcd(value.adjoint()) : value;
        seen[cid] = true;
    }
    for (bool v : seen)
        if (!v) throw std::invalid_argument("certificate: missing class blocks");
    return m;
}

inline json to_json(const NpaMatrix& npa) {
    json words = json::array();
    for (const auto& w : npa.words.words) words.push_back(to_string(w, npa.words.scenario));
    json out{{"format", 1},
             {"kind", "certificate"},
             {"flavor", "npa"},
             {"scenario", to_json(npa.words.scenario)},
             {"level", npa.words.level},
             {"alphabet", "measurement_only"},
             {"words", std::move(words)}};
    out.update(to_json(npa.entries));
    return out;
}

inline json dual_certificate_to_json(const SolveOutcome& outcome, const ScenarioSpec& s, int level) {
    json blocks = json::array();
    for (const auto& z : outcome.dual_blocks) blocks.push_back(to_json(z));
    return json{{"format", 1},
                {"kind", "certificate"},
                {"flavor", "dual"},
                {"scenario", to_json(s)},
                {"level", level},
                {"blocks", std::move(blocks)},
                {"margin", outcome.dual_margin},
                {"orthogonality_residual", outcome.dual_orth_residual},
                {"eigenvalue_residual", outcome.dual_eig_residual}};
}

// ---- verdict records ----

inline std::string fnv1a_digest(const std::string& bytes) {
    uint64_t h = 1469598103934665603ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[32];
    std::snprintf(buf, sizeof(buf), "fnv1a:%016llx", static_cast<unsigned long long>(h));
    return buf;
}

inline json verdict_record(const SolveOutcome& outcome, const ScenarioSpec& scenario, int level,
                           const std::string& command, const std::string& input_digest) {
    json residuals = json::object();
    for (const auto& e : outcome.certificate_report.entries) residuals[e.family] = e.residual;
    return json{{"format", 1},
                {"kind", "verdict"},
                {"command", command},
                {"verdict", to_string(outcome.verdict)},
                {"level", level},
                {"scenario", to_json(scenario)},
                {"residuals", residuals},
                {"margins",
                 {{"shift", outcome.shift},
                  {"dual_margin", outcome.dual_margin},
                  {"dual_orthogonality_residual", outcome.dual_orth_residual},
                  {"dual_eigenvalue_residual", outcome.dual_eig_residual}}},
                {"solver_status", outcome.solver_status},
                {"iterations", outcome.iterations},
                {"wall_time_s", outcome.solve_seconds},
                {"tool_version", kVersion},
                {"input_digest", input_digest},
                {"warnings", outcome.warnings}};
}

inline json bound_record(const BoundResult& b, const ScenarioSpec& scenario, int level,
                         const std::string& input_digest) {
    return json{{"format", 1},
                {"kind", "verdict"},
                {"command", "bound"},
                {"verdict", b.reliable ? "bound" : "unknown"},
                {"upper_bound", b.upper_bound},
                {"objective", b.objective},
                {"gap", b.gap},
                {"level", level},
                {"scenario", to_json(scenario)},
                {"solver_status", b.solver_status},
                {"iterations", b.iterations},
                {"wall_time_s", b.solve_seconds},
                {"tool_version", kVersion},
                {"input_digest", input_digest},
                {"warnings", b.warnings}};
}

// ---- files ----

inline json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(path + ": " + e.what());
    }
    return j;
}

inline void write_json_file(const std::string& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw std::invalid_argument("cannot write " + path);
    out << j.dump(2) << "\n";
}

inline std::string read_file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::invalid_argument("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace steerhier::io
