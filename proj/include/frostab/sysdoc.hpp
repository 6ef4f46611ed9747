#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "frostab/certificate_json.hpp"
#include "frostab/interval.hpp"
#include "frostab/synthesis.hpp"

// ============================================================================
// System description documents.  JSON, schema_version 1, strict: unknown
// fields are rejected with their path so a typo in a matrix name cannot
// silently drop data.
//
//   {
//     "schema_version": 1,
//     "alpha": 0.3,
//     "A": {"lower": [[..]], "upper": [[..]]},
//     "B": {"lower": [[..]], "upper": [[..]]},
//     "C": [[..]],
//     "delay": {"tau": t, "mu": m, "form": {"type": "constant"|"sin_exp"|"table", ...}},
//     "controller": {"n_c": k, "A_c": [[..]], "B_c": [[..]], "C_c": [[..]], "D_c": [[..]]}
//   }
//
// The controller block is optional.  Empty matrices serialize as [].
// ============================================================================

namespace frostab {

class schema_error : public error {
public:
    explicit schema_error(const std::string& msg) : error(msg) {}
};

struct SystemDoc {
    FoSystem system;
    std::optional<Controller> controller;

    // validation findings that are reported, not fixed (e.g. a delay profile
    // whose analytic supremum exceeds the declared tau bound)
    std::vector<std::string> warnings;
};

namespace detail {

inline void reject_unknown(const ojson& j, const std::set<std::string>& allowed,
                           const std::string& path) {
    for (const auto& [key, value] : j.items()) {
        (void)value;
        if (!allowed.count(key))
            throw schema_error("unknown field \"" + path + key + "\" (strict schema)");
    }
}

inline const ojson& need(const ojson& j, const std::string& key, const std::string& path) {
    if (!j.contains(key)) throw schema_error("missing field \"" + path + key + "\"");
    return j[key];
}

inline double need_number(const ojson& j, const std::string& key, const std::string& path) {
    const ojson& v = need(j, key, path);
    if (!v.is_number()) throw schema_error("field \"" + path + key + "\" must be a number");
    return v.get<double>();
}

inline IntervalMatrix interval_from_json(const ojson& j, const std::string& path) {
    if (!j.is_object()) throw schema_error("field \"" + path + "\" must hold lower/upper bounds");
    reject_unknown(j, {"lower", "upper"}, path + ".");
    Mat lo = mat_from_json(need(j, "lower", path + "."), path + ".lower");
    Mat up = mat_from_json(need(j, "upper", path + "."), path + ".upper");
    try {
        return IntervalMatrix(std::move(lo), std::move(up));
    } catch (const error& e) {
        throw schema_error(path + ": " + e.what());
    }
}

inline Mat shaped_or_empty(const ojson& j, std::size_t rows, std::size_t cols,
                           const std::string& path) {
    Mat m = mat_from_json(j, path);
    if (m.rows() == 0 && rows * cols == 0) return Mat(rows, cols);
    if (m.rows() != rows || m.cols() != cols)
        throw schema_error(path + ": expected " + std::to_string(rows) + "x" +
                           std::to_string(cols) + ", got " + m.shape_str());
    return m;
}

}  // namespace detail

inline Controller controller_from_json(const ojson& j, std::size_t l, std::size_t m,
                                       const std::string& path = "controller") {
    if (!j.is_object()) throw schema_error(path + ": expected an object");
    detail::reject_unknown(j, {"n_c", "A_c", "B_c", "C_c", "D_c"}, path + ".");
    const ojson& ncj = detail::need(j, "n_c", path + ".");
    if (!ncj.is_number_unsigned()) throw schema_error(path + ".n_c: expected a non-negative integer");
    const auto nc = ncj.get<std::size_t>();
    Controller k;
    k.a_c = detail::shaped_or_empty(detail::need(j, "A_c", path + "."), nc, nc, path + ".A_c");
    k.b_c = detail::shaped_or_empty(detail::need(j, "B_c", path + "."), nc, m, path + ".B_c");
    k.c_c = detail::shaped_or_empty(detail::need(j, "C_c", path + "."), l, nc, path + ".C_c");
    k.d_c = detail::shaped_or_empty(detail::need(j, "D_c", path + "."), l, m, path + ".D_c");
    return k;
}

inline Controller controller_from_json_file(const std::string& text, std::size_t l, std::size_t m) {
    ojson j;
    try {
        j = ojson::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw schema_error(std::string("controller JSON: ") + e.what());
    }
    return controller_from_json(j, l, m);
}

inline DelaySpec delay_from_json(const ojson& j) {
    if (!j.is_object()) throw schema_error("delay: expected an object");
    detail::reject_unknown(j, {"tau", "mu", "form"}, "delay.");
    const double tau = detail::need_number(j, "tau", "delay.");
    const double mu = detail::need_number(j, "mu", "delay.");
    const ojson& form = detail::need(j, "form", "delay.");
    if (!form.is_object()) throw schema_error("delay.form: expected an object");
    const ojson& type = detail::need(form, "type", "delay.form.");
    if (!type.is_string()) throw schema_error("delay.form.type: expected a string");
    const std::string t = type.get<std::string>();
    try {
        if (t == "constant") {
            detail::reject_unknown(form, {"type", "value"}, "delay.form.");
            return DelaySpec::constant(detail::need_number(form, "value", "delay.form."), tau);
        }
        if (t == "sin_exp") {
            detail::reject_unknown(form, {"type", "a"}, "delay.form.");
            return DelaySpec::sin_exp(detail::need_number(form, "a", "delay.form."), tau, mu);
        }
        if (t == "table") {
            detail::reject_unknown(form, {"type", "samples"}, "delay.form.");
            const ojson& samples = detail::need(form, "samples", "delay.form.");
            if (!samples.is_array()) throw schema_error("delay.form.samples: expected an array");
            std::vector<std::pair<double, double>> tbl;
            for (const auto& s : samples) {
                if (!s.is_array() || s.size() != 2 || !s[0].is_number() || !s[1].is_number())
                    throw schema_error("delay.form.samples: entries must be [t, d] pairs");
                tbl.emplace_back(s[0].get<double>(), s[1].get<double>());
            }
            return DelaySpec::from_table(std::move(tbl), tau, mu);
        }
    } catch (const schema_error&) {
        throw;
    } catch (const error& e) {
        throw schema_error(std::string("delay: ") + e.what());
    }
    throw schema_error("delay.form.type: unknown form \"" + t + "\"");
}

inline ojson delay_to_json(const DelaySpec& d) {
    ojson j;
    j["tau"] = d.tau;
    j["mu"] = d.mu;
    ojson form;
    switch (d.form) {
        case DelaySpec::Form::Constant:
            form["type"] = "constant";
            form["value"] = d.constant_value;
            break;
        case DelaySpec::Form::SinExp:
            form["type"] = "sin_exp";
            form["a"] = d.sin_exp_a;
            break;
        case DelaySpec::Form::Table: {
            form["type"] = "table";
            ojson samples = ojson::array();
            for (const auto& [t, v] : d.table) samples.push_back(ojson::array({t, v}));
            form["samples"] = std::move(samples);
            break;
        }
    }
    j["form"] = std::move(form);
    return j;
}

inline SystemDoc parse_system_doc(const ojson& j) {
    if (!j.is_object()) throw schema_error("document root must be an object");
    detail::reject_unknown(j, {"schema_version", "alpha", "A", "B", "C", "delay", "controller"},
                           "");
    const ojson& ver = detail::need(j, "schema_version", "");
    if (!ver.is_number_integer() || ver.get<int>() != 1)
        throw schema_error("schema_version: this tool reads version 1");

    SystemDoc doc;
    doc.system.alpha = detail::need_number(j, "alpha", "");
    doc.system.a_int = detail::interval_from_json(detail::need(j, "A", ""), "A");
    doc.system.b_int = detail::interval_from_json(detail::need(j, "B", ""), "B");
    doc.system.c_out = mat_from_json(detail::need(j, "C", ""), "C");
    doc.system.delay = delay_from_json(detail::need(j, "delay", ""));
    try {
        doc.system.validate();
    } catch (const error& e) {
        throw schema_error(std::string("system: ") + e.what());
    }
    if (j.contains("controller")) {
        doc.controller = controller_from_json(j["controller"], doc.system.input_dim(),
                                              doc.system.output_dim());
        try {
            doc.controller->validate(doc.system.input_dim(), doc.system.output_dim());
        } catch (const error& e) {
            throw schema_error(std::string("controller: ") + e.what());
        }
    }
    if (doc.system.delay.sup_exceeds_tau())
        doc.warnings.push_back(
            "delay profile supremum exceeds the declared tau bound; the declared tau is used for "
            "certificates and the profile is clamped in simulation");
    return doc;
}

inline SystemDoc parse_system_doc_text(const std::string& text) {
    ojson j;
    try {
        j = ojson::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw schema_error(std::string("document JSON: ") + e.what());
    }
    return parse_system_doc(j);
}

inline ojson system_doc_to_json(const SystemDoc& doc) {
    ojson j;
    j["schema_version"] = 1;
    j["alpha"] = doc.system.alpha;
    ojson a;
    a["lower"] = mat_to_json(doc.system.a_int.lower);
    a["upper"] = mat_to_json(doc.system.a_int.upper);
    j["A"] = std::move(a);
    ojson b;
    b["lower"] = mat_to_json(doc.system.b_int.lower);
    b["upper"] = mat_to_json(doc.system.b_int.upper);
    j["B"] = std::move(b);
    j["C"] = mat_to_json(doc.system.c_out);
    j["delay"] = delay_to_json(doc.system.delay);
    if (doc.controller) j["controller"] = controller_to_json(*doc.controller);
    return j;
}

}  // namespace frostab
