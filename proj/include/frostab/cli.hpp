#pragma once

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "frostab/fde.hpp"
#include "frostab/sysdoc.hpp"

// ============================================================================
// Command-line frontend.  Five subcommands over system-description documents:
//
//   analyze     delay-dependent robust (or certain) stability certificate
//   synthesize  fixed-order output-feedback controller design
//   simulate    fractional delay simulation of a sampled member system
//   spectrum    eigenvalue sector scan of sampled members
//   verify      independent audit of a certificate file
//
// Exit codes: 0 certified/success, 1 usage/IO/schema, 2 not certified or
// infeasible or inconclusive, 3 trace divergence.  Never conflated.
// ============================================================================

namespace frostab::cli {

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw error("cannot open \"" + path + "\" for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw error("cannot open \"" + path + "\" for writing");
    out << content;
}

inline std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

namespace detail {

inline void print_warnings(const SystemDoc& doc, bool quiet) {
    if (quiet) return;
    for (const std::string& w : doc.warnings) std::cerr << "warning: " << w << "\n";
}

inline bool degenerate(const IntervalMatrix& im) {
    return (im.upper - im.lower).norm_max() == 0.0;
}

// The stability problem a document induces: closed loop when a controller is
// present, otherwise the (A, B) pair read as (non-delayed, delayed), which
// requires a square B.
struct InducedProblem {
    UncertaintyFactors a_uf;
    UncertaintyFactors b_uf;
};

inline InducedProblem induced_factors(const SystemDoc& doc) {
    InducedProblem ip;
    if (doc.controller) {
        const ClosedLoop cl = close_loop(doc.system, *doc.controller);
        ip.a_uf = cl.a_cl;
        ip.b_uf = cl.a_dcl;
    } else {
        if (doc.system.b_int.rows() != doc.system.b_int.cols())
            throw error(
                "document has no controller and B is not square: nothing plays the role of the "
                "delayed-state coefficient");
        ip.a_uf = build_factors(doc.system.a_int);
        ip.b_uf = build_factors(doc.system.b_int);
    }
    return ip;
}

inline void print_report(const StabilityReport& rep, std::ostream& os) {
    for (const VerifyRow& r : rep.verification.rows)
        os << "  " << r.label << ": extreme " << fmt(r.extreme) << " margin " << fmt(r.margin)
           << (r.pass ? " (ok)" : " (violated)") << "\n";
}

inline std::vector<double> parse_x0(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            out.push_back(std::stod(item));
        } catch (...) {
            throw error("cannot parse --x0 entry \"" + item + "\"");
        }
    }
    return out;
}

struct SamplePick {
    Mat a;
    Mat b;
};

inline SamplePick pick_samples(const FoSystem& sys, const std::string& spec) {
    const UncertaintyFactors a_uf = build_factors(sys.a_int);
    const UncertaintyFactors b_uf = build_factors(sys.b_int);
    auto fixed = [&](double delta) {
        SamplePick p;
        p.a = sample_member(a_uf, std::vector<double>(a_uf.slot_count(), delta));
        p.b = sample_member(b_uf, std::vector<double>(b_uf.slot_count(), delta));
        return p;
    };
    if (spec == "center") return fixed(0.0);
    if (spec == "upper") return fixed(1.0);
    if (spec == "lower") return fixed(-1.0);
    if (spec.rfind("seed:", 0) == 0) {
        std::uint64_t seed = 0;
        try {
            seed = std::stoull(spec.substr(5));
        } catch (...) {
            throw error("cannot parse sample seed in \"" + spec + "\"");
        }
        Rng rng(seed);
        std::vector<double> da(a_uf.slot_count()), db(b_uf.slot_count());
        for (double& d : da) d = rng.uniform(-1.0, 1.0);
        for (double& d : db) d = rng.uniform(-1.0, 1.0);
        return {sample_member(a_uf, da), sample_member(b_uf, db)};
    }
    throw error("--sample must be center, upper, lower, or seed:N");
}

}  // namespace detail

// ----------------------------------------------------------------------------
// analyze
// ----------------------------------------------------------------------------

inline int cmd_analyze(const std::string& input, bool certain, double margin,
                       const std::string& out, bool quiet) {
    SystemDoc doc;
    try {
        doc = parse_system_doc_text(read_file(input));
    } catch (const error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    detail::print_warnings(doc, quiet);

    AnalyzeOptions opts;
    opts.solve.margin = margin;
    StabilityReport rep;
    LmiProblem problem;
    try {
        if (certain) {
            if (!detail::degenerate(doc.system.a_int) || !detail::degenerate(doc.system.b_int)) {
                std::cerr << "error: --certain requires lower == upper in A and B\n";
                return 1;
            }
            const detail::InducedProblem ip = detail::induced_factors(doc);
            const DelayedPair pair{ip.a_uf.center, ip.b_uf.center};
            problem = assemble_certain(pair, doc.system.delay.tau, doc.system.delay.mu);
            rep = analyze_certain(pair, doc.system.delay.tau, doc.system.delay.mu, opts);
        } else {
            const detail::InducedProblem ip = detail::induced_factors(doc);
            problem = assemble_interval(ip.a_uf, ip.b_uf, doc.system.delay.tau,
                                        doc.system.delay.mu);
            rep = analyze_interval(ip.a_uf, ip.b_uf, doc.system.delay.tau, doc.system.delay.mu,
                                   opts);
        }
    } catch (const error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }

    if (rep.verdict == Verdict::CertifiedStable) {
        std::cout << "verdict: certified_stable (feasibility margin "
                  << fmt(rep.certificate->margin) << ", solve "
                  << fmt(rep.stats.solve_seconds) << " s)\n";
        if (!quiet) detail::print_report(rep, std::cout);
        if (!out.empty())
            write_file(out, certificate_to_json(problem, *rep.certificate).dump(2) + "\n");
        return 0;
    }
    std::cout << "verdict: unknown (" << rep.solver_reason << ")\n";
    return 2;
}

// ----------------------------------------------------------------------------
// synthesize
// ----------------------------------------------------------------------------

inline int cmd_synthesize(const std::string& input, std::size_t order, std::size_t max_iter,
                          const std::string& out, bool quiet) {
    SystemDoc doc;
    try {
        doc = parse_system_doc_text(read_file(input));
    } catch (const error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    detail::print_warnings(doc, quiet);

    SynthesizeOptions opts;
    opts.max_outer_iter = max_iter;
    SynthesisResult res;
    try {
        res = synthesize(doc.system, order, opts);
    } catch (const synthesis_error& e) {
        const char* kind = e.kind() == SynthesisFailure::NoFeasibleIterate ? "no feasible iterate"
                           : e.kind() == SynthesisFailure::RecoveryFailure ? "recovery failure"
                                                          : "post-validation failure";
        std::cout << "synthesis failed: " << kind << "\n";
        if (!quiet) std::cerr << e.what() << "\n";
        return 2;
    } catch (const error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }

    const std::string stem =
        out.size() > 5 && out.substr(out.size() - 5) == ".json" ? out.substr(0, out.size() - 5)
                                                                : out;
    try {
        write_file(out, controller_to_json(res.controller).dump(2) + "\n");
        // the certificate that matters: the robust analysis of the closed loop
        const ClosedLoop cl = close_loop(doc.system, res.controller);
        const LmiProblem post_problem = assemble_interval(
            cl.a_cl, cl.a_dcl, doc.system.delay.tau, doc.system.delay.mu);
        write_file(stem + ".cert.json",
                   certificate_to_json(post_problem, *res.post_validation.certificate).dump(2) +
                       "\n");
        ojson report;
        report["verdict"] = "certified_stable";
        report["outer_iterations"] = res.iterations;
        report["recovery_residual_max"] = res.recovery_residuals.max();
        ojson rows = ojson::array();
        for (const VerifyRow& r : res.post_validation.verification.rows) {
            ojson row;
            row["constraint"] = r.label;
            row["extreme"] = r.extreme;
            row["margin"] = r.margin;
            row["pass"] = r.pass;
            rows.push_back(std::move(row));
        }
        report["post_validation"] = std::move(rows);
        write_file(stem + ".validation.json", report.dump(2) + "\n");
    } catch (const error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    std::cout << "controller of order " << res.controller.order()
              << " synthesized; closed loop certified (post-validation margin "
              << fmt(res.post_validation.certificate->margin) << ")\n";
    if (!quiet)
        std::cout << "  files: " << out << ", " << stem << ".cert.json, " << stem
                  << ".validation.json\n";
    return 0;
}

// ----------------------------------------------------------------------------
// simulate
// ----------------------------------------------------------------------------

inline int cmd_simulate(const std::string& input, const std::string& sample, double h,
                        double horizon, const std::string& x0_text, const std::string& out,
                        bool quiet) {
    SystemDoc doc;
    try {
        doc = parse_system_doc_text(read_file(input));
    } catch (const error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    detail::print_warnings(doc, quiet);

    Trace tr;
    try {
        const detail::SamplePick pick = detail::pick_samples(doc.system, sample);
        const std::size_t n = doc.system.state_dim();
        std::vector<double> x0(n, 1.0);
        if (!x0_text.empty()) {
            x0 = detail::parse_x0(x0_text);
            if (x0.size() != n)
                throw error("--x0 needs " + std::to_string(n) + " entries for this plant");
        }
        SimConfig cfg;
        cfg.step_h = h;
        cfg.horizon_t = horizon;
        cfg.history_constant = x0;
        if (doc.controller) {
            cfg.history_constant.resize(n + doc.controller->order(), 0.0);
            tr = simulate_closed_loop(pick.a, pick.b, doc.system.c_out, *doc.controller,
                                      doc.system.delay, doc.system.alpha, cfg);
        } else {
            Mat a_d(n, n);
            if (pick.b.rows() == n && pick.b.cols() == n) {
                a_d = pick.b;
            } else if (!quiet) {
                std::cerr << "warning: B is not square and no controller is present; simulating "
                             "with a zero delayed term\n";
            }
            tr = simulate(pick.a, a_d, doc.system.delay, doc.system.alpha, cfg);
        }
        std::ostringstream csv;
        trace_to_csv(tr, csv);
        write_file(out, csv.str());
    } catch (const error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    if (tr.diverged) {
        std::cout << "trace diverged at step " << tr.diverged_step << " (t = "
                  << fmt(static_cast<double>(tr.diverged_step) * h) << "); partial trace written to "
                  << out << "\n";
        return 3;
    }
    std::cout << "trace written to " << out << " (" << tr.times.size() << " samples, final norm "
              << fmt(tr.norms.back()) << ")\n";
    return 0;
}

// ----------------------------------------------------------------------------
// spectrum
// ----------------------------------------------------------------------------

inline int cmd_spectrum(const std::string& input, std::size_t count, std::uint64_t seed,
                        const std::string& out, bool quiet) {
    SystemDoc doc;
    try {
        doc = parse_system_doc_text(read_file(input));
    } catch (const error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    detail::print_warnings(doc, quiet);

    bool all_positive = true;
    try {
        IntervalMatrix scan_int;
        if (doc.controller) {
            scan_int = close_loop(doc.system, *doc.controller).a_cl.hull();
        } else {
            if (doc.system.a_int.rows() != doc.system.a_int.cols())
                throw error("spectrum needs a square non-delayed coefficient");
            scan_int = doc.system.a_int;
        }
        const auto samples = sector_scan(scan_int, doc.system.alpha, count, seed);
        std::ostringstream csv;
        csv << "# alpha=" << fmt(doc.system.alpha)
            << ",boundary=" << fmt(doc.system.alpha * M_PI / 2.0) << "\n";
        csv << "sample_id,eig_index,re,im,arg,margin\n";
        for (std::size_t s = 0; s < samples.size(); ++s) {
            for (std::size_t e = 0; e < samples[s].spectrum.values.size(); ++e) {
                const auto& lam = samples[s].spectrum.values[e];
                csv << s << ',' << e << ',' << fmt(lam.real()) << ',' << fmt(lam.imag()) << ','
                    << fmt(std::arg(lam)) << ',' << fmt(samples[s].margins[e]) << "\n";
                all_positive = all_positive && samples[s].margins[e] > 0.0;
            }
        }
        write_file(out, csv.str());
        std::cout << (all_positive ? "all sampled eigenvalues inside the stability sector\n"
                                   : "sector violations found\n");
        std::cout << "scatter written to " << out << "\n";
    } catch (const error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return all_positive ? 0 : 2;
}

// ----------------------------------------------------------------------------
// verify
// ----------------------------------------------------------------------------

inline int cmd_verify(const std::string& cert_path, const std::string& input, double tol,
                      bool quiet) {
    SystemDoc doc;
    ojson cert_json;
    try {
        doc = parse_system_doc_text(read_file(input));
        cert_json = ojson::parse(read_file(cert_path));
    } catch (const nlohmann::json::parse_error& e) {
        std::cerr << "error: certificate JSON: " << e.what() << "\n";
        return 1;
    } catch (const error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    detail::print_warnings(doc, quiet);

    try {
        const bool robust = cert_json.contains("vars") && cert_json["vars"].contains("eta");
        LmiProblem problem;
        const detail::InducedProblem ip = detail::induced_factors(doc);
        if (robust) {
            problem = assemble_interval(ip.a_uf, ip.b_uf, doc.system.delay.tau,
                                        doc.system.delay.mu);
        } else {
            problem = assemble_certain({ip.a_uf.center, ip.b_uf.center}, doc.system.delay.tau,
                                       doc.system.delay.mu);
            if (!quiet &&
                (!detail::degenerate(doc.system.a_int) || !detail::degenerate(doc.system.b_int)))
                std::cerr << "warning: certificate has no eta variable; auditing the "
                             "certain-system problem at the interval centers\n";
        }
        const Certificate cert = certificate_from_json(problem, cert_json);
        const VerifyReport rep = verify(problem, cert, tol);
        for (const VerifyRow& r : rep.rows)
            std::cout << r.label << ": extreme " << fmt(r.extreme) << " margin " << fmt(r.margin)
                      << (r.pass ? " (ok)" : " (violated)") << "\n";
        std::cout << (rep.pass ? "certificate verified\n" : "certificate rejected\n");
        return rep.pass ? 0 : 2;
    } catch (const error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

// ----------------------------------------------------------------------------
// dispatch
// ----------------------------------------------------------------------------

inline int run(const std::vector<std::string>& args) {
    CLI::App app{"Robust stability and stabilization of fractional-order interval systems with "
                 "time-varying delay"};
    app.require_subcommand(1);
    app.set_help_flag("--help", "print help");  // keep -h free for the step-size flag

    std::string input, out, cert_path, sample = "center", x0_text;
    bool certain = false, quiet = false;
    double margin = 1e-6, tol = 1e-8, h = 0.01, horizon = 50.0;
    std::size_t order = 0, max_iter = 10, count = 200;
    std::uint64_t seed = 1;

    auto sub = [&](const std::string& name, const std::string& desc) {
        CLI::App* s = app.add_subcommand(name, desc);
        s->set_help_flag("--help", "print help");
        return s;
    };

    CLI::App* analyze = sub("analyze", "stability certificate for a document");
    analyze->add_option("input", input, "system document (JSON)")->required();
    analyze->add_flag("--certain", certain, "use the certain-system problem (needs lower == upper)");
    analyze->add_option("--margin", margin, "strictness shift for the solver");
    analyze->add_option("--out", out, "write the certificate JSON here");
    analyze->add_flag("--quiet", quiet, "suppress warnings and detail rows");

    CLI::App* synth = sub("synthesize", "fixed-order output feedback design");
    synth->add_option("input", input, "system document (JSON)")->required();
    synth->add_option("--order", order, "controller order n_c");
    synth->add_option("--max-iter", max_iter, "outer iteration cap");
    synth->add_option("--out", out, "controller JSON path")->default_val("controller.json");
    synth->add_flag("--quiet", quiet, "suppress warnings and file listing");

    CLI::App* sim = sub("simulate", "fractional delay simulation of a sample");
    sim->add_option("input", input, "system document (JSON)")->required();
    sim->add_option("--sample", sample, "center | upper | lower | seed:N");
    sim->add_option("--h", h, "step size");
    sim->add_option("--horizon", horizon, "final time");
    sim->add_option("--x0", x0_text, "comma-separated plant initial state");
    sim->add_option("--out", out, "trace CSV path")->default_val("trace.csv");
    sim->add_flag("--quiet", quiet, "suppress warnings");

    CLI::App* spec = sub("spectrum", "eigenvalue sector scan of sampled members");
    spec->add_option("input", input, "system document (JSON)")->required();
    spec->add_option("--count", count, "number of sampled member matrices");
    spec->add_option("--seed", seed, "sampling seed");
    spec->add_option("--out", out, "scatter CSV path")->default_val("spectrum.csv");
    spec->add_flag("--quiet", quiet, "suppress warnings");

    CLI::App* ver = sub("verify", "audit a certificate against a document");
    ver->add_option("certificate", cert_path, "certificate JSON")->required();
    ver->add_option("input", input, "system document (JSON)")->required();
    ver->add_option("--tol", tol, "verification tolerance");
    ver->add_flag("--quiet", quiet, "suppress warnings");

    std::vector<const char*> argv;
    argv.push_back("frostab");
    for (const std::string& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    if (app.got_subcommand(analyze)) return cmd_analyze(input, certain, margin, out, quiet);
    if (app.got_subcommand(synth)) return cmd_synthesize(input, order, max_iter, out, quiet);
    if (app.got_subcommand(sim)) return cmd_simulate(input, sample, h, horizon, x0_text, out, quiet);
    if (app.got_subcommand(spec)) return cmd_spectrum(input, count, seed, out, quiet);
    if (app.got_subcommand(ver)) return cmd_verify(cert_path, input, tol, quiet);
    return 1;
}

}  // namespace frostab::cli
