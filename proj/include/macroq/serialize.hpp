#ifndef MACROQ_SERIALIZE_HPP
#define MACROQ_SERIALIZE_HPP

#include <string>

#include "json.hpp"
#include "macroq/bell.hpp"
#include "macroq/dicke.hpp"
#include "macroq/grid.hpp"
#include "macroq/leggett_garg.hpp"
#include "macroq/qubit.hpp"

namespace macroq {

using json = nlohmann::json;

inline json to_json(const cplx& z) { return json::array({z.real(), z.imag()}); }

inline cplx cplx_from_json(const json& j) {
    return cplx(j.at(0).get<double>(), j.at(1).get<double>());
}

inline json to_json(const Mat2& m) {
    json rows = json::array();
    for (int r = 0; r < 2; ++r) {
        json row = json::array();
        for (int c = 0; c < 2; ++c) row.push_back(to_json(m(r, c)));
        rows.push_back(row);
    }
    return rows;
}

inline Mat2 mat2_from_json(const json& j) {
    Mat2 m;
    for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 2; ++c) m(r, c) = cplx_from_json(j.at(r).at(c));
    return m;
}

inline json to_json(const CMatrix& m) {
    json rows = json::array();
    for (int r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (int c = 0; c < m.cols(); ++c) row.push_back(to_json(m(r, c)));
        rows.push_back(row);
    }
    return rows;
}

inline CMatrix cmatrix_from_json(const json& j) {
    int rows = int(j.size());
    int cols = rows ? int(j.at(0).size()) : 0;
    CMatrix m(rows, cols);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) m(r, c) = cplx_from_json(j.at(r).at(c));
    return m;
}

inline json to_json(const ChannelSpec& s) {
    json j{{"kind", to_string(s.kind)}, {"strength", s.strength}, {"loss_p", s.loss_p}};
    if (s.kind == ChannelKind::custom) {
        json proc = json::array();
        for (const cplx& v : s.process) proc.push_back(to_json(v));
        j["process"] = proc;
    }
    return j;
}

inline ChannelSpec channel_from_json(const json& j) {
    ChannelSpec s;
    std::string kind = j.at("kind").get<std::string>();
    if (kind == "identity")
        s.kind = ChannelKind::identity;
    else if (kind == "dephasing")
        s.kind = ChannelKind::dephasing;
    else if (kind == "depolarizing")
        s.kind = ChannelKind::depolarizing;
    else if (kind == "custom")
        s.kind = ChannelKind::custom;
    else
        throw std::invalid_argument("channel_from_json: unknown kind " + kind);
    s.strength = j.value("strength", 0.0);
    s.loss_p = j.value("loss_p", 1.0);
    if (s.kind == ChannelKind::custom) {
        const json& proc = j.at("process");
        for (int i = 0; i < 16; ++i) s.process[i] = cplx_from_json(proc.at(i));
    }
    s.validate();
    return s;
}

inline json to_json(const QubitObservable& a) {
    return json{{"matrix", to_json(a.matrix)},
                {"eigenvalues", json::array({a.eigenvalues[0], a.eigenvalues[1]})}};
}

inline QubitObservable observable_from_json(const json& j) {
    return eig_decompose(mat2_from_json(j.at("matrix")));
}

inline json to_json(const LimitMeasurement& m) {
    return json{{"beta", m.beta}, {"phi", m.phi}, {"sigma", m.sigma}};
}

inline LimitMeasurement limit_measurement_from_json(const json& j) {
    return LimitMeasurement{j.at("beta").get<double>(), j.at("phi").get<double>(),
                            j.at("sigma").get<double>()};
}

inline json to_json(const RescaleParams& r) {
    return json{{"lambda", r.lambda}, {"mu", r.mu}};
}

inline json to_json(const DickeCoefficients& d) {
    return json{{"n_particles", d.n_particles}, {"d", d.d}, {"rho", to_json(d.rho)}};
}

inline DickeCoefficients dicke_from_json(const json& j) {
    return DickeCoefficients::density(j.at("n_particles").get<long>(),
                                      cmatrix_from_json(j.at("rho")));
}

inline json to_json(const FockState& s) { return json{{"dim", s.dim}, {"rho", to_json(s.rho)}}; }

inline FockState fock_from_json(const json& j) {
    FockState s;
    s.rho = cmatrix_from_json(j.at("rho"));
    s.dim = s.rho.rows();
    s.validate();
    return s;
}

inline json to_json(const GridSpec& g) {
    return json{{"x_min", g.x_min}, {"x_max", g.x_max}, {"n", g.n}};
}

inline json to_json(const DensityGrid& g) {
    return json{{"x_min", g.xs.front()},
                {"x_max", g.xs.back()},
                {"n", g.xs.size()},
                {"dx", g.dx},
                {"values", g.values}};
}

inline DensityGrid density_from_json(const json& j) {
    DensityGrid g;
    int n = j.at("n").get<int>();
    double x_min = j.at("x_min").get<double>(), x_max = j.at("x_max").get<double>();
    g.dx = (x_max - x_min) / (n - 1);
    g.xs.resize(n);
    for (int i = 0; i < n; ++i) g.xs[i] = x_min + i * g.dx;
    g.values = j.at("values").get<std::vector<double>>();
    return g;
}

inline json to_json(const CHSHResult& r) {
    return json{{"kind", to_string(r.kind)},
                {"value", r.value},
                {"angles", r.angles},
                {"correlators", r.correlators},
                {"state", to_json(r.state)},
                {"width", r.width},
                {"error_bound", r.error_bound}};
}

/// Report form shared by all identity checks.
struct IdentityReport {
    std::string identity;
    json parameters;
    double residual = 0.0;
    double tolerance = 0.0;
    bool pass = false;
};

inline json to_json(const IdentityReport& r) {
    return json{{"identity", r.identity},
                {"parameters", r.parameters},
                {"residual", r.residual},
                {"tolerance", r.tolerance},
                {"pass", r.pass}};
}

}  // namespace macroq

#endif
