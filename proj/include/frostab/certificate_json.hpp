#pragma once

#include <json.hpp>

#include "frostab/lmi.hpp"

// Certificate wire format:
//   {"vars": {name: {"shape": [r,c], "data": [[...]]}}, "margin": m, "backend": s}
// Keys follow declaration order, which nlohmann::ordered_json preserves.

namespace frostab {

using ojson = nlohmann::ordered_json;

inline ojson mat_to_json(const Mat& m) {
    ojson rows = ojson::array();
    for (std::size_t i = 0; i < m.rows(); ++i) {
        ojson row = ojson::array();
        for (std::size_t j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline Mat mat_from_json(const ojson& j, const std::string& where) {
    if (!j.is_array()) throw error(where + ": expected an array of rows");
    const std::size_t r = j.size();
    if (r == 0) return Mat();
    if (!j[0].is_array()) throw error(where + ": expected nested row arrays");
    const std::size_t c = j[0].size();
    Mat m(r, c);
    for (std::size_t i = 0; i < r; ++i) {
        if (!j[i].is_array() || j[i].size() != c) throw error(where + ": ragged rows");
        for (std::size_t k = 0; k < c; ++k) {
            if (!j[i][k].is_number()) throw error(where + ": non-numeric entry");
            m(i, k) = j[i][k].get<double>();
        }
    }
    if (!m.all_finite()) throw error(where + ": non-finite entry");
    return m;
}

inline ojson certificate_to_json(const LmiProblem& p, const Certificate& cert) {
    ojson vars = ojson::object();
    for (std::size_t vi = 0; vi < p.vars().size(); ++vi) {
        const VarInfo& info = p.vars()[vi];
        ojson v = ojson::object();
        v["shape"] = {info.rows, info.cols};
        v["data"] = cert.assigned({vi}) ? mat_to_json(cert.value({vi})) : ojson::array();
        vars[info.name] = std::move(v);
    }
    ojson out = ojson::object();
    out["vars"] = std::move(vars);
    out["margin"] = cert.margin;
    out["backend"] = cert.backend_name;
    return out;
}

// Rebuilds a certificate for `p`, matching variables by name.  Every declared
// variable must be present with the declared shape.
inline Certificate certificate_from_json(const LmiProblem& p, const ojson& j) {
    if (!j.contains("vars") || !j["vars"].is_object())
        throw error("certificate: missing \"vars\" object");
    Certificate cert;
    cert.values.resize(p.vars().size());
    for (std::size_t vi = 0; vi < p.vars().size(); ++vi) {
        const VarInfo& info = p.vars()[vi];
        if (!j["vars"].contains(info.name))
            throw error("certificate: variable \"" + info.name +
                        "\" required by the problem is missing");
        const ojson& v = j["vars"][info.name];
        if (!v.contains("data")) throw error("certificate: variable \"" + info.name + "\" has no data");
        Mat m = mat_from_json(v["data"], "certificate var \"" + info.name + "\"");
        if (m.rows() == 0 && info.rows * info.cols == 0) m = Mat(info.rows, info.cols);
        if (m.rows() != info.rows || m.cols() != info.cols)
            throw dimension_error("certificate: variable \"" + info.name + "\" is " +
                                  m.shape_str() + ", problem expects " +
                                  std::to_string(info.rows) + "x" + std::to_string(info.cols));
        cert.values[vi] = std::move(m);
    }
    cert.margin = j.value("margin", 0.0);
    cert.backend_name = j.value("backend", std::string("external"));
    return cert;
}

}  // namespace frostab
