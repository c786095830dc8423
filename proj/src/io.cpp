#include "monotrack/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "monotrack/errors.hpp"

namespace monotrack::io {

Matrix matrix_from_json(const json& j, const std::string& what)
{
    if (!j.is_array() || j.empty()) throw Error(ErrorCode::InvalidArgument, what + " must be a nonempty array of rows");
    const std::size_t rows = j.size();
    const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
    if (cols == 0) throw Error(ErrorCode::InvalidArgument, what + " rows must be nonempty arrays");
    Matrix M(static_cast<Index>(rows), static_cast<Index>(cols));
    for (std::size_t r = 0; r < rows; ++r) {
        if (!j[r].is_array() || j[r].size() != cols) throw Error(ErrorCode::InvalidArgument, what + " is ragged");
        for (std::size_t c = 0; c < cols; ++c) {
            if (!j[r][c].is_number()) throw Error(ErrorCode::InvalidArgument, what + " entries must be numbers");
            M(static_cast<Index>(r), static_cast<Index>(c)) = j[r][c].get<double>();
        }
    }
    return M;
}

json matrix_to_json(const Matrix& M)
{
    json out = json::array();
    for (Index r = 0; r < M.rows(); ++r) {
        json row = json::array();
        for (Index c = 0; c < M.cols(); ++c) row.push_back(M(r, c));
        out.push_back(row);
    }
    return out;
}

namespace {

json vector_to_json(const Vector& v)
{
    json out = json::array();
    for (Index i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

Vector vector_from_json(const json& j, const std::string& what)
{
    if (!j.is_array()) throw Error(ErrorCode::InvalidArgument, what + " must be an array");
    Vector v(static_cast<Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number()) throw Error(ErrorCode::InvalidArgument, what + " entries must be numbers");
        v(static_cast<Index>(i)) = j[i].get<double>();
    }
    return v;
}

Complex complex_from_json(const json& j)
{
    if (j.is_number()) return {j.get<double>(), 0.0};
    if (j.is_object()) return {j.at("re").get<double>(), j.value("im", 0.0)};
    if (j.is_array() && j.size() == 2) return {j[0].get<double>(), j[1].get<double>()};
    throw Error(ErrorCode::InvalidArgument, "mode must be a number, [re, im] or {re, im}");
}

json index_list(const std::vector<Index>& idx)
{
    json out = json::array();
    for (Index i : idx) out.push_back(i + 1);
    return out;
}

}  // namespace

json complex_to_json(Complex z)
{
    return json{{"re", z.real()}, {"im", z.imag()}};
}

LtiSystem system_from_json(const json& j)
{
    if (!j.is_object()) throw Error(ErrorCode::InvalidArgument, "system file must hold a JSON object");
    const std::string dom = j.value("time_domain", "continuous");
    TimeDomain domain;
    if (dom == "continuous") domain = TimeDomain::Continuous;
    else if (dom == "discrete") domain = TimeDomain::Discrete;
    else throw Error(ErrorCode::InvalidArgument, "time_domain must be \"continuous\" or \"discrete\"");
    for (const char* key : {"A", "B", "C", "D"})
        if (!j.contains(key)) throw Error(ErrorCode::InvalidArgument, std::string("system file lacks ") + key);
    return LtiSystem(matrix_from_json(j["A"], "A"), matrix_from_json(j["B"], "B"), matrix_from_json(j["C"], "C"),
                     matrix_from_json(j["D"], "D"), domain);
}

json system_to_json(const LtiSystem& sys)
{
    return json{{"time_domain", to_string(sys.domain())},
                {"A", matrix_to_json(sys.A())},
                {"B", matrix_to_json(sys.B())},
                {"C", matrix_to_json(sys.C())},
                {"D", matrix_to_json(sys.D())}};
}

json read_json(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw std::runtime_error("malformed JSON in " + path + ": " + e.what());
    }
}

void write_text(const std::string& path, const std::string& text)
{
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << text;
    if (!out) throw std::runtime_error("write failed for " + path);
}

LtiSystem load_system(const std::string& path)
{
    return system_from_json(read_json(path));
}

ReplayInputs replay_from_json(const json& j, const LtiSystem& sys)
{
    ReplayInputs rep;
    if (j.contains("vstar_g")) {
        const json& g = j["vstar_g"];
        PairedBasis pb;
        pb.V = matrix_from_json(g.at("V"), "vstar_g.V");
        pb.W = matrix_from_json(g.at("W"), "vstar_g.W");
        if (pb.V.rows() != sys.n() || pb.W.rows() != sys.m() || pb.V.cols() != pb.W.cols())
            throw Error(ErrorCode::DimensionMismatch, "replay V*g must be n x k and W m x k");
        const json& modes = g.at("modes");
        if (!modes.is_array() || static_cast<Index>(modes.size()) != pb.V.cols())
            throw Error(ErrorCode::InvalidArgument, "one mode per replay V*g column required");
        for (std::size_t i = 0; i < modes.size(); ++i) {
            const Complex z = complex_from_json(modes[i]);
            ColumnMode cm{z, ColumnMode::Kind::Real, true};
            if (z.imag() != 0.0) {
                const bool first = i == 0 || pb.modes.back().kind != ColumnMode::Kind::PairRe;
                cm.kind = first ? ColumnMode::Kind::PairRe : ColumnMode::Kind::PairIm;
                cm.value = z.imag() > 0.0 ? z : std::conj(z);
            }
            pb.modes.push_back(cm);
        }
        rep.vstar_g = pb;
    }
    if (j.contains("directions")) {
        for (const json& d : j["directions"]) {
            DirectionPair dp;
            dp.output_index = d.at("output").get<Index>() - 1;
            if (dp.output_index < 0 || dp.output_index >= sys.p())
                throw Error(ErrorCode::InvalidArgument, "replay direction output out of range");
            dp.v = vector_from_json(d.at("v"), "direction v");
            dp.w = vector_from_json(d.at("w"), "direction w");
            if (dp.v.size() != sys.n() || dp.w.size() != sys.m())
                throw Error(ErrorCode::DimensionMismatch, "replay direction has the wrong length");
            rep.directions.push_back(dp);
        }
    }
    return rep;
}

ReplayInputs load_replay(const std::string& path, const LtiSystem& sys)
{
    return replay_from_json(read_json(path), sys);
}

json zeros_to_json(const std::vector<InvariantZero>& zeros)
{
    json out = json::array();
    for (const auto& z : zeros)
        out.push_back(json{{"value", complex_to_json(z.value)},
                           {"geometric_multiplicity", z.geometric_multiplicity},
                           {"algebraic_multiplicity", z.algebraic_multiplicity},
                           {"minimum_phase", z.is_minimum_phase}});
    return out;
}

json audit_to_json(const AssumptionReport& rep)
{
    return json{{"right_invertible", rep.right_invertible},
                {"stabilizable", rep.stabilizable},
                {"no_zero_at_tracking_frequency", rep.no_zero_at_tracking_frequency},
                {"distinct_min_phase_zeros", rep.distinct_min_phase_zeros},
                {"all_pass", rep.all_pass()},
                {"details", rep.details}};
}

json verdict_to_json(const SolvabilityVerdict& v)
{
    json fails = json::array();
    for (const auto& f : v.failing_subsets)
        fails.push_back(json{{"subset", index_list(f.subset)}, {"achieved", f.achieved}, {"required", f.required}});
    json out{{"solvable", v.solvable},
             {"failing_subsets", fails},
             {"failing_count", v.failing_count},
             {"h", v.h},
             {"delta", v.delta ? index_list(*v.delta) : json(nullptr)}};
    if (v.global_form_solvable) out["global_form_solvable"] = *v.global_form_solvable;
    return out;
}

json paired_basis_to_json(const PairedBasis& pb)
{
    json modes = json::array();
    for (const auto& m : pb.modes) {
        const char* kind = m.kind == ColumnMode::Kind::Real ? "real"
                           : m.kind == ColumnMode::Kind::PairRe ? "pair_re"
                                                                 : "pair_im";
        modes.push_back(json{{"value", complex_to_json(m.value)}, {"kind", kind}, {"from_zero", m.from_zero}});
    }
    return json{{"dim", pb.dim()},
                {"V", matrix_to_json(pb.V)},
                {"W", matrix_to_json(pb.W)},
                {"modes", modes},
                {"draws", pb.draws}};
}

json feedback_to_json(const FeedbackResult& fb)
{
    json spectrum = json::array();
    for (const Complex& z : fb.closed_loop_spectrum) spectrum.push_back(complex_to_json(z));
    json modes = json::array();
    for (std::size_t j = 0; j < fb.assigned_modes.size(); ++j) {
        if (fb.assigned_modes[j]) modes.push_back(json{{"output", j + 1}, {"mode", *fb.assigned_modes[j]}});
        else modes.push_back(json{{"output", j + 1}, {"mode", "instantaneous"}});
    }
    json dirs = json::array();
    for (const auto& d : fb.directions)
        dirs.push_back(json{{"output", d.output_index + 1},
                            {"mode", d.mode},
                            {"beta", d.beta},
                            {"v", vector_to_json(d.v)},
                            {"w", vector_to_json(d.w)}});
    return json{{"F", matrix_to_json(fb.F)},
                {"x_ss", vector_to_json(fb.x_ss)},
                {"u_ss", vector_to_json(fb.u_ss)},
                {"V", matrix_to_json(fb.V)},
                {"W", matrix_to_json(fb.W)},
                {"closed_loop_spectrum", spectrum},
                {"assigned_modes", modes},
                {"delta", index_list(fb.delta)},
                {"directions", dirs},
                {"vstar_g", paired_basis_to_json(fb.vstar_g)},
                {"verdict", verdict_to_json(fb.verdict)}};
}

json trace_to_json(const SimulationTrace& tr)
{
    json modes = json::array();
    for (const auto& m : tr.modes) modes.push_back(m ? json(*m) : json("instantaneous"));
    return json{{"time_domain", to_string(tr.domain)},
                {"times", tr.times},
                {"x0", vector_to_json(tr.x0)},
                {"reference", vector_to_json(tr.reference)},
                {"modes", modes},
                {"epsilon", matrix_to_json(tr.epsilon)},
                {"xi", matrix_to_json(tr.xi)}};
}

json stats_to_json(const GenericityStats& st)
{
    return json{{"trials", st.trials},
                {"rstar_rank_deficient", st.rstar_rank_deficient},
                {"vstar_g_rank_deficient", st.vstar_g_rank_deficient},
                {"direction_rank_deficient", st.direction_rank_deficient},
                {"synthesis_failures", st.synthesis_failures},
                {"full_rank_successes", st.full_rank_successes},
                {"success_fraction", st.success_fraction()},
                {"failing_seeds", st.failing_seeds}};
}

std::string format_number(double x)
{
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.15g", x);
    return buf;
}

void write_trace_csv(std::ostream& os, const SimulationTrace& tr)
{
    os << "t";
    for (Index k = 0; k < tr.epsilon.rows(); ++k) os << ",eps_" << k + 1;
    for (Index k = 0; k < tr.xi.rows(); ++k) os << ",xi_" << k + 1;
    os << "\n";
    for (Index t = 0; t < tr.epsilon.cols(); ++t) {
        os << format_number(tr.times[static_cast<std::size_t>(t)]);
        for (Index k = 0; k < tr.epsilon.rows(); ++k) os << "," << format_number(tr.epsilon(k, t));
        for (Index k = 0; k < tr.xi.rows(); ++k) os << "," << format_number(tr.xi(k, t));
        os << "\n";
    }
}

void write_trace_long_csv(std::ostream& os, const SimulationTrace& tr)
{
    os << "t,series,value\n";
    for (Index t = 0; t < tr.epsilon.cols(); ++t) {
        const std::string time = format_number(tr.times[static_cast<std::size_t>(t)]);
        for (Index k = 0; k < tr.epsilon.rows(); ++k)
            os << time << ",eps_" << k + 1 << "," << format_number(tr.epsilon(k, t)) << "\n";
        for (Index k = 0; k < tr.xi.rows(); ++k)
            os << time << ",xi_" << k + 1 << "," << format_number(tr.xi(k, t)) << "\n";
    }
}

void write_gain_csv(std::ostream& os, const Matrix& F)
{
    for (Index r = 0; r < F.rows(); ++r) {
        for (Index c = 0; c < F.cols(); ++c) os << (c ? "," : "") << format_number(F(r, c));
        os << "\n";
    }
}

}  // namespace monotrack::io
