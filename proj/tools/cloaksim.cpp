// cloaksim: meshes, solves, DN operators, cell problems and cloaking sweeps.

#include "cloaksim/dnmap.hpp"
#include "cloaksim/errors.hpp"
#include "cloaksim/experiments.hpp"
#include "cloaksim/expr.hpp"
#include "cloaksim/geometry.hpp"
#include "cloaksim/homog.hpp"
#include "cloaksim/mesh.hpp"
#include "cloaksim/presets.hpp"
#include "cloaksim/report.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>

using namespace cloaksim;
using nlohmann::json;

namespace {

enum Exit { kOk = 0, kPrecondition = 2, kNumerical = 3, kIo = 4 };

struct Globals {
    std::optional<double> h;
    std::optional<int> modes;
    std::optional<double> tol;
    int threads = 1;
    std::uint64_t seed = 0;
    std::string out_dir = ".";
    std::string config;
};

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out << text;
    if (!out) throw IoError("write failed: " + path);
}

std::string in_dir(const Globals& g, const std::string& path) {
    if (path.empty() || std::filesystem::path(path).is_absolute()) return path;
    return (std::filesystem::path(g.out_dir) / path).string();
}

void emit(const Globals& g, const std::string& out, const json& j) {
    if (out.empty()) {
        std::cout << j.dump(2) << '\n';
        return;
    }
    write_text(in_dir(g, out), j.dump(2) + "\n");
}

// Radii where a preset coefficient jumps, so meshes can align with them.
std::vector<double> default_alignment(const std::string& key) {
    const PresetKey k = PresetKey::parse(key);
    if (k.name == "regular-cloak" && k.args.size() == 1) return {1.0};
    if (k.name == "truncated-singular-cloak" && k.args.size() == 1) return {1.0, k.args[0]};
    if ((k.name == "homogenized-radial" || k.name == "isotropic-cloak") && k.args.size() >= 2)
        return {k.args[0] - 2.0 * k.args[1], k.args[0]};
    return {};
}

MeshPtr make_mesh(const std::string& mesh_file, double radius, std::vector<double> align, double h) {
    if (!mesh_file.empty()) return std::make_shared<const TriMesh>(load_mesh(mesh_file));
    std::sort(align.begin(), align.end());
    align.erase(std::remove_if(align.begin(), align.end(), [&](double r) { return !(r > 0.0 && r < radius); }),
                align.end());
    return std::make_shared<const TriMesh>(build_disk_mesh(radius, align, h));
}

PicardConfig picard_from(const Globals& g) {
    PicardConfig p;
    if (g.tol) p.tol = *g.tol;
    return p;
}

// Cell coefficient for "laminate:a,b" (a on y₁ < ½) or "expr:<scalar in x, y, t>".
std::function<Mat2(const Vec2&)> cell_profile(const std::string& key, double t) {
    if (key.rfind("laminate:", 0) == 0) {
        const auto k = PresetKey::parse("laminate(" + key.substr(9) + ")");
        if (k.args.size() != 2 || !(k.args[0] > 0.0) || !(k.args[1] > 0.0))
            throw PreconditionError("laminate profile needs two positive values");
        const double a = k.args[0], b = k.args[1];
        return [a, b](const Vec2& y) -> Mat2 { return (y.x() < 0.5 ? a : b) * Mat2::Identity(); };
    }
    if (key.rfind("expr:", 0) == 0) {
        const Expression e = Expression::parse(key.substr(5));
        return [e, t](const Vec2& y) -> Mat2 {
            ExprVariables v;
            v.x = y.x();
            v.y = y.y();
            v.r = y.norm();
            v.theta = std::atan2(y.y(), y.x());
            v.t = t;
            return e(v) * Mat2::Identity();
        };
    }
    throw PreconditionError("unknown cell profile '" + key + "'");
}

// Inserts "--key value" tokens from a flat JSON config right after the subcommand, skipping keys
// already given on the command line.
std::vector<std::string> with_config(std::vector<std::string> args, const std::set<std::string>& subcommands) {
    std::string path;
    for (std::size_t i = 0; i + 1 < args.size(); ++i)
        if (args[i] == "--config") path = args[i + 1];
    for (const auto& a : args)
        if (a.rfind("--config=", 0) == 0) path = a.substr(9);
    if (path.empty()) return args;

    std::ifstream in(path);
    if (!in) throw IoError("cannot read config " + path);
    json cfg;
    try {
        in >> cfg;
    } catch (const json::exception& e) {
        throw IoError("config " + path + ": " + e.what());
    }
    if (!cfg.is_object()) throw PreconditionError("config must be a JSON object");

    std::set<std::string> given;
    for (const auto& a : args)
        if (a.rfind("--", 0) == 0) given.insert(a.substr(2, a.find('=') == std::string::npos ? std::string::npos : a.find('=') - 2));

    std::vector<std::string> extra;
    for (const auto& [key, value] : cfg.items()) {
        if (key == "config" || given.count(key)) continue;
        if (value.is_boolean()) {
            if (value.get<bool>()) extra.push_back("--" + key);
            continue;
        }
        extra.push_back("--" + key);
        auto token = [](const json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); };
        if (value.is_array())
            for (const auto& v : value) extra.push_back(token(v));
        else
            extra.push_back(token(value));
    }
    std::size_t at = 1;
    for (std::size_t i = 1; i < args.size(); ++i)
        if (subcommands.count(args[i])) {
            at = i + 1;
            break;
        }
    args.insert(args.begin() + static_cast<long>(at), extra.begin(), extra.end());
    return args;
}

int report_exit(const DecayReport& report) {
    for (const auto& r : report.rows)
        if (r.converged) return kOk;
    std::cerr << "no sweep point converged\n";
    return kNumerical;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Quasi-linear cloaking experiments"};
    app.set_help_flag("--help", "Print this help message and exit");
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    app.add_option("--h", g.h, "Target mesh size");
    app.add_option("--modes", g.modes, "Fourier modes K");
    app.add_option("--tol", g.tol, "Picard tolerance");
    app.add_option("--threads", g.threads, "Worker threads (0: all cores)");
    app.add_option("--seed", g.seed, "Random seed");
    app.add_option("--out-dir", g.out_dir, "Directory for relative output paths");
    app.add_option("--config", g.config, "JSON file mirroring the flags; flags override it");

    std::function<int()> action;

    // mesh
    auto* mesh_cmd = app.add_subcommand("mesh", "Build a layered disk mesh");
    double mesh_radius = 2.0, mesh_grading = 0.0;
    std::vector<double> mesh_align;
    std::string mesh_out;
    mesh_cmd->add_option("--radius", mesh_radius);
    mesh_cmd->add_option("--align", mesh_align, "Radii realized as mesh circles");
    mesh_cmd->add_option("--grading", mesh_grading);
    mesh_cmd->add_option("--out", mesh_out);
    mesh_cmd->callback([&] {
        action = [&] {
            DiskMeshOptions o;
            o.grading = mesh_grading;
            std::sort(mesh_align.begin(), mesh_align.end());
            const TriMesh m = build_disk_mesh(mesh_radius, mesh_align, g.h.value_or(0.05), o);
            if (mesh_out.empty()) {
                write_mesh(std::cout, m);
            } else {
                save_mesh(in_dir(g, mesh_out), m);
                std::cout << json{{"vertices", m.vertex_count()}, {"triangles", m.triangle_count()},
                                  {"h_max", m.h_max}, {"out", in_dir(g, mesh_out)}}
                                 .dump()
                          << '\n';
            }
            return kOk;
        };
    });

    // map-check
    auto* map_cmd = app.add_subcommand("map-check", "Inversion and Jacobian errors of a map");
    std::string map_key = "regular:0.5";
    int map_samples = 1000;
    map_cmd->add_option("--map", map_key, "identity | regular:<r> | singular | dilation:<c>");
    map_cmd->add_option("--samples", map_samples);
    map_cmd->callback([&] {
        action = [&] {
            const MapCheck c = check_map(make_map(map_key), map_samples, g.seed);
            std::cout << json{{"map", map_key},
                              {"samples", c.samples},
                              {"max_inversion_error", c.max_inversion_error},
                              {"max_jacobian_error", c.max_jacobian_error}}
                             .dump(2)
                      << '\n';
            return kOk;
        };
    });

    // solve
    auto* solve_cmd = app.add_subcommand("solve", "Solve the Dirichlet problem on B2");
    std::string solve_coeff = "identity", solve_inclusion = "identity", solve_f = "cos(k*theta)", solve_out,
                solve_mesh;
    double solve_k = 1.0;
    bool solve_values = false;
    std::vector<double> solve_align;
    solve_cmd->add_option("--coeff", solve_coeff, "Preset key");
    solve_cmd->add_option("--inclusion", solve_inclusion);
    solve_cmd->add_option("--f", solve_f, "Boundary data in x, y, r, theta, k");
    solve_cmd->add_option("--k", solve_k);
    solve_cmd->add_option("--align", solve_align);
    solve_cmd->add_option("--mesh", solve_mesh, "Mesh file instead of a generated mesh");
    solve_cmd->add_option("--out", solve_out);
    solve_cmd->add_flag("--values", solve_values, "Include vertex values");
    solve_cmd->callback([&] {
        action = [&] {
            const auto a = make_preset(solve_coeff, solve_inclusion);
            auto align = solve_align.empty() ? default_alignment(solve_coeff) : solve_align;
            const MeshPtr mesh = make_mesh(solve_mesh, 2.0, align, g.h.value_or(0.05));
            const Expression f = Expression::parse(solve_f);
            Eigen::VectorXd data(mesh->boundary.size());
            for (std::size_t i = 0; i < mesh->boundary.size(); ++i) {
                const Vec2& p = mesh->vertices[mesh->boundary[i]];
                ExprVariables v;
                v.x = p.x();
                v.y = p.y();
                v.r = p.norm();
                v.theta = std::atan2(p.y(), p.x());
                v.k = solve_k;
                data(static_cast<long>(i)) = f(v);
            }
            AssemblyOptions ao;
            ao.threads = g.threads;
            const Assembler as(mesh, ao);
            const auto res = solve_quasilinear(as, a, data, picard_from(g));
            const Norms n = norms(res.u);
            json j{{"coefficient", a.name},
                   {"f", solve_f},
                   {"k", solve_k},
                   {"vertices", mesh->vertex_count()},
                   {"h_max", mesh->h_max},
                   {"iterations", res.iterations},
                   {"converged", res.converged},
                   {"final_damping", res.final_damping},
                   {"updates", res.update_history},
                   {"norms", {{"l2", n.l2}, {"h1_semi", n.h1_semi}, {"h1", n.h1}}}};
            if (solve_values) j["values"] = std::vector<double>(res.u.values.data(), res.u.values.data() + res.u.values.size());
            emit(g, solve_out, j);
            return res.converged ? kOk : kNumerical;
        };
    });

    // dnmap
    auto* dn_cmd = app.add_subcommand("dnmap", "Truncated DN operator in the Fourier basis");
    std::string dn_coeff = "identity", dn_inclusion = "identity", dn_out = "op.json", dn_mesh;
    std::vector<double> dn_align;
    dn_cmd->add_option("--coeff", dn_coeff);
    dn_cmd->add_option("--inclusion", dn_inclusion);
    dn_cmd->add_option("--align", dn_align);
    dn_cmd->add_option("--mesh", dn_mesh);
    dn_cmd->add_option("--out", dn_out);
    dn_cmd->callback([&] {
        action = [&] {
            const auto a = make_preset(dn_coeff, dn_inclusion);
            auto align = dn_align.empty() ? default_alignment(dn_coeff) : dn_align;
            const MeshPtr mesh = make_mesh(dn_mesh, 2.0, align, g.h.value_or(0.05));
            const Assembler as(mesh);
            DnOptions o;
            o.picard = picard_from(g);
            o.threads = g.threads;
            const auto op = dn_operator(a, FourierBasis::on(*mesh, g.modes.value_or(8)), as, o);
            save_operator(in_dir(g, dn_out), op);
            std::cout << json{{"out", in_dir(g, dn_out)}, {"vertices", mesh->vertex_count()},
                              {"converged", op.all_converged()}}
                             .dump()
                      << '\n';
            return op.all_converged() ? kOk : kNumerical;
        };
    });

    // dndiff
    auto* diff_cmd = app.add_subcommand("dndiff", "Weighted spectral difference of two operators");
    std::string diff_a, diff_b;
    diff_cmd->add_option("op1", diff_a)->required();
    diff_cmd->add_option("op2", diff_b)->required();
    diff_cmd->callback([&] {
        action = [&] {
            const double d = dn_difference(load_operator(diff_a), load_operator(diff_b));
            std::cout << json{{"dn_difference", d}}.dump() << '\n';
            return kOk;
        };
    });

    // cell
    auto* cell_cmd = app.add_subcommand("cell", "Periodic cell problem");
    std::string cell_key = "laminate:1,4", cell_out;
    int cell_n = 64, cell_levels = 0;
    double cell_t = 0.0;
    cell_cmd->add_option("--profile", cell_key, "laminate:a,b | expr:<scalar in x, y, t>");
    cell_cmd->add_option("--n", cell_n, "Grid cells per direction");
    cell_cmd->add_option("--quad-levels", cell_levels);
    cell_cmd->add_option("--t", cell_t, "State value");
    cell_cmd->add_option("--out", cell_out);
    cell_cmd->callback([&] {
        action = [&] {
            CellProblem p;
            p.a_cell = cell_profile(cell_key, cell_t);
            p.n1 = p.n2 = cell_n;
            p.quad_levels = cell_levels;
            const CellSolution s = solve_cell(p);
            Eigen::SelfAdjointEigenSolver<Mat2> eig(s.a_star);
            json j{{"profile", cell_key},
                   {"t", cell_t},
                   {"n", cell_n},
                   {"a_star", {{s.a_star(0, 0), s.a_star(0, 1)}, {s.a_star(1, 0), s.a_star(1, 1)}}},
                   {"eigenvalues", {eig.eigenvalues()(0), eig.eigenvalues()(1)}},
                   {"reuss", s.reuss},
                   {"voigt", s.voigt},
                   {"mean_residual", s.mean_residual}};
            emit(g, cell_out, j);
            return kOk;
        };
    });

    // cloak-build
    auto* build_cmd = app.add_subcommand("cloak-build", "Fit the isotropic cloak amplitudes");
    RadialCloakSpec spec;
    std::string build_out;
    build_cmd->add_option("--R", spec.big_r);
    build_cmd->add_option("--eta", spec.eta);
    build_cmd->add_option("--M", spec.big_m);
    build_cmd->add_option("--eps", spec.eps);
    build_cmd->add_option("--psi", spec.psi);
    build_cmd->add_option("--step", spec.lattice_step, "Radius lattice spacing");
    build_cmd->add_option("--out", build_out);
    build_cmd->callback([&] {
        action = [&] {
            const IsotropicCloak cloak(spec);
            json lattice = json::array();
            for (std::size_t i = 0; i < cloak.lattice().size(); ++i) {
                const double r = cloak.lattice()[i];
                const auto& fit = cloak.fits()[i];
                const auto tg = cloak_targets(spec.big_r, spec.eta, spec.psi, r);
                lattice.push_back({{"r", r},
                                   {"a1", fit.a1},
                                   {"a2", fit.a2},
                                   {"residual", fit.residual()},
                                   {"eigenvalues", {tg.harmonic, tg.arithmetic}},
                                   {"radial", true}});
            }
            json j{{"R", spec.big_r},
                   {"eta", spec.eta},
                   {"M", spec.big_m},
                   {"eps", spec.eps},
                   {"psi", spec.psi},
                   {"core_radius", cloak.core_radius()},
                   {"max_fit_residual", cloak.max_fit_residual()},
                   {"lattice", lattice}};
            emit(g, build_out, j);
            return kOk;
        };
    });

    // sweeps
    ExperimentConfig sweep;
    std::vector<std::string> formats{"csv", "json", "gnuplot-dat"};
    std::string stem;
    auto add_sweep = [&](const std::string& name, ExperimentKind kind, const std::string& help) {
        auto* cmd = app.add_subcommand(name, help);
        cmd->add_option("--schedule", sweep.schedule, "Parameter values");
        cmd->add_option("--inclusion", sweep.inclusion, "Inclusion key");
        cmd->add_option("--format", formats, "csv json gnuplot-dat");
        cmd->add_option("--name", stem, "Output file stem");
        cmd->add_flag("--no-dn", [&](std::int64_t) { sweep.compute_dn = false; }, "Skip DN operators");
        switch (kind) {
        case ExperimentKind::RegularCloak:
            cmd->add_option("--grading", sweep.grading);
            break;
        case ExperimentKind::TruncatedSingular:
            cmd->add_option("--layer-elements", sweep.layer_elements);
            cmd->add_flag("--plain", sweep.plain_reference, "Also report the uncloaked inclusion");
            break;
        case ExperimentKind::Homogenization:
            cmd->add_option("--R", sweep.big_r);
            cmd->add_option("--eta", sweep.eta);
            cmd->add_option("--M", sweep.big_m);
            cmd->add_option("--psi", sweep.psi);
            cmd->add_option("--eps1", sweep.eps1);
            cmd->add_option("--per-period", sweep.elements_per_period);
            cmd->add_option("--quad-levels", sweep.quad_levels);
            cmd->add_option("--outer-radius", sweep.outer_radius);
            break;
        case ExperimentKind::DiffeoInvariance:
            cmd->add_option("--coeff", sweep.coefficient);
            cmd->add_option("--map", sweep.map);
            break;
        }
        cmd->callback([&, kind, name] {
            action = [&, kind, name] {
                sweep.kind = kind;
                if (sweep.schedule.empty()) {
                    switch (kind) {
                    case ExperimentKind::RegularCloak: sweep.schedule = {0.4, 0.2, 0.1, 0.05}; break;
                    case ExperimentKind::TruncatedSingular: sweep.schedule = {1.5, 1.25, 1.1}; break;
                    case ExperimentKind::Homogenization: sweep.schedule = {1, 2, 3, 4}; break;
                    case ExperimentKind::DiffeoInvariance: sweep.schedule = {0.1, 0.05, 0.025}; break;
                    }
                }
                if (kind == ExperimentKind::DiffeoInvariance && sweep.inclusion == "5I") sweep.inclusion = "identity";
                if (g.h) sweep.h = *g.h;
                if (g.modes) sweep.modes = *g.modes;
                if (g.tol) sweep.picard.tol = *g.tol;
                sweep.threads = g.threads;
                sweep.seed = g.seed;
                std::vector<ReportFormat> fmts;
                for (const auto& f : formats) fmts.push_back(parse_report_format(f));
                const DecayReport report = run_experiment(sweep);
                std::filesystem::create_directories(g.out_dir);
                const auto paths = emit_report(report, fmts, in_dir(g, stem.empty() ? name : stem));
                write_csv(std::cout, report);
                for (const auto& [k, v] : report.summary) std::cout << "# " << k << " = " << v << '\n';
                for (const auto& p : paths) std::cout << "# wrote " << p << '\n';
                return report_exit(report);
            };
        });
    };
    add_sweep("sweep-regular", ExperimentKind::RegularCloak, "Regular near-cloak decay sweep over r");
    add_sweep("sweep-singular", ExperimentKind::TruncatedSingular, "Truncated singular cloak sweep over rho");
    add_sweep("sweep-homog", ExperimentKind::Homogenization, "Isotropic cloak sequence sweep over n");
    add_sweep("diffeo-check", ExperimentKind::DiffeoInvariance, "DN invariance under a boundary-fixing map");

    std::set<std::string> names;
    for (const auto* sub : app.get_subcommands({})) names.insert(sub->get_name());

    try {
        std::vector<std::string> args(argv, argv + argc);
        args = with_config(args, names);
        std::vector<std::string> rest(args.begin() + 1, args.end());
        std::reverse(rest.begin(), rest.end());
        app.parse(rest);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kOk : kPrecondition;
    } catch (const PreconditionError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kPrecondition;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kIo;
    }

    try {
        return action ? action() : kOk;
    } catch (const PreconditionError& e) {
        std::cerr << "precondition failure: " << e.what() << '\n';
        return kPrecondition;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kNumerical;
    } catch (const IoError& e) {
        std::cerr << "I/O failure: " << e.what() << '\n';
        return kIo;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "I/O failure: " << e.what() << '\n';
        return kIo;
    }
}
