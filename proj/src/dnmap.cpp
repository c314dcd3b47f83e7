#include "cloaksim/dnmap.hpp"

#include "cloaksim/errors.hpp"
#include "cloaksim/parallel.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <numbers>

namespace cloaksim {

namespace {

FourierBasis basis_skeleton(int max_mode) {
    if (max_mode < 0) throw PreconditionError("Fourier basis needs max_mode >= 0");
    FourierBasis b;
    b.max_mode = max_mode;
    b.modes.push_back(0);
    b.labels.push_back("1");
    for (int k = 1; k <= max_mode; ++k) {
        b.modes.push_back(k);
        b.labels.push_back("cos(" + std::to_string(k) + "*theta)");
        b.modes.push_back(k);
        b.labels.push_back("sin(" + std::to_string(k) + "*theta)");
    }
    return b;
}

}  // namespace

FourierBasis FourierBasis::abstract(int max_mode) { return basis_skeleton(max_mode); }

FourierBasis FourierBasis::on(const TriMesh& mesh, int max_mode) {
    FourierBasis b = basis_skeleton(max_mode);
    const auto nb = static_cast<Eigen::Index>(mesh.boundary.size());
    b.values.resize(nb, static_cast<Eigen::Index>(b.size()));
    for (Eigen::Index i = 0; i < nb; ++i) {
        const Vec2& p = mesh.vertices[mesh.boundary[i]];
        const double th = std::atan2(p.y(), p.x());
        b.values(i, 0) = 1.0;
        for (int k = 1; k <= max_mode; ++k) {
            b.values(i, 2 * k - 1) = std::cos(k * th);
            b.values(i, 2 * k) = std::sin(k * th);
        }
    }
    return b;
}

double FourierBasis::weight(std::size_t j) const {
    const double k = modes.at(j);
    return std::sqrt(1.0 + k * k);
}

Eigen::MatrixXd FourierBasis::gram(const TriMesh& mesh) const {
    const auto nb = mesh.boundary.size();
    if (static_cast<std::size_t>(values.rows()) != nb) throw PreconditionError("basis does not match mesh boundary");
    Eigen::VectorXd w = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(nb));
    for (std::size_t i = 0; i < nb; ++i) {
        const double len = (mesh.vertices[mesh.boundary[(i + 1) % nb]] - mesh.vertices[mesh.boundary[i]]).norm();
        w[static_cast<Eigen::Index>(i)] += 0.5 * len;
        w[static_cast<Eigen::Index>((i + 1) % nb)] += 0.5 * len;
    }
    return values.transpose() * w.asDiagonal() * values;
}

bool DtNOperator::all_converged() const {
    for (bool c : converged) {
        if (!c) return false;
    }
    return true;
}

DtNOperator dn_operator(const CoefficientField& a, const FourierBasis& basis, const Assembler& assembler,
                        const DnOptions& options) {
    const MeshPtr& mesh = assembler.mesh();
    if (static_cast<std::size_t>(basis.values.rows()) != mesh->boundary.size()) {
        throw PreconditionError("Fourier basis is not sampled on this mesh's boundary");
    }
    options.picard.check();
    const auto n = basis.size();
    DtNOperator op;
    op.basis = basis;
    op.coefficient = a.name;
    op.nonlinear = a.state_dependent;
    op.amplitude = options.amplitude;
    op.pairing = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    op.converged.assign(n, false);
    op.iterations.assign(n, 0);

    if (!a.state_dependent) {
        const SparseSystem sys = assembler.assemble(freeze(a, nullptr));
        DirichletSolver solver(options.picard.solver);
        solver.factorize(sys);
        std::vector<Eigen::VectorXd> flux(n);
        parallel_for(n, options.threads, [&](std::size_t j) {
            const Eigen::VectorXd f = options.amplitude * basis.values.col(static_cast<Eigen::Index>(j));
            const Eigen::VectorXd u = solver.solve(f);
            const Eigen::VectorXd r = sys.matrix * u;
            Eigen::VectorXd rb(static_cast<Eigen::Index>(mesh->boundary.size()));
            for (std::size_t i = 0; i < mesh->boundary.size(); ++i) rb[static_cast<Eigen::Index>(i)] = r[mesh->boundary[i]];
            flux[j] = rb;
        });
        for (std::size_t j = 0; j < n; ++j) {
            op.pairing.col(static_cast<Eigen::Index>(j)) = basis.values.transpose() * flux[j];
            op.converged[j] = true;
            op.iterations[j] = 1;
        }
        return op;
    }

    // Column workers each own an assembler so assembly threads are not oversubscribed.
    const int workers = std::min<int>(resolve_threads(options.threads), static_cast<int>(n));
    AssemblyOptions inner = assembler.options();
    if (workers > 1) inner.threads = 1;
    std::vector<Eigen::VectorXd> flux(n);
    parallel_for(n, workers, [&](std::size_t j) {
        Assembler local(mesh, inner);
        const Eigen::VectorXd f = options.amplitude * basis.values.col(static_cast<Eigen::Index>(j));
        const QSolveResult res = solve_quasilinear(local, a, f, options.picard);
        flux[j] = boundary_flux(local, res.u, a);
        op.converged[j] = res.converged;
        op.iterations[j] = res.iterations;
    });
    for (std::size_t j = 0; j < n; ++j) op.pairing.col(static_cast<Eigen::Index>(j)) = basis.values.transpose() * flux[j];
    return op;
}

namespace {

Eigen::VectorXd inverse_sqrt_weights(const DtNOperator& op1, const DtNOperator& op2) {
    if (op1.basis.modes != op2.basis.modes || op1.pairing.rows() != op2.pairing.rows() ||
        op1.pairing.cols() != op2.pairing.cols()) {
        throw PreconditionError("DN operators use different bases");
    }
    Eigen::VectorXd w(static_cast<Eigen::Index>(op1.basis.size()));
    for (std::size_t j = 0; j < op1.basis.size(); ++j) w[static_cast<Eigen::Index>(j)] = 1.0 / std::sqrt(op1.basis.weight(j));
    return w;
}

}  // namespace

double dn_difference(const DtNOperator& op1, const DtNOperator& op2) {
    const Eigen::VectorXd w = inverse_sqrt_weights(op1, op2);
    const Eigen::MatrixXd d = w.asDiagonal() * (op1.pairing - op2.pairing) * w.asDiagonal();
    if (d.size() == 0) return 0.0;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(d);
    return svd.singularValues()[0];
}

double dn_column_difference(const DtNOperator& op1, const DtNOperator& op2, std::size_t column) {
    const Eigen::VectorXd w = inverse_sqrt_weights(op1, op2);
    const auto j = static_cast<Eigen::Index>(column);
    if (j >= op1.pairing.cols()) throw PreconditionError("DN column out of range");
    return (w.asDiagonal() * (op1.pairing.col(j) - op2.pairing.col(j))).norm() * w[j];
}

double neumann_trace_error(const FeFunction& u1, const FeFunction& u2, const CoefficientField& a1,
                           const CoefficientField& a2, double band_inner, int max_mode) {
    if (!u1.mesh || u1.mesh != u2.mesh) throw PreconditionError("neumann_trace_error: fields live on different meshes");
    const TriMesh& mesh = *u1.mesh;
    std::vector<char> on_boundary(mesh.vertex_count(), 0);
    for (int b : mesh.boundary) on_boundary[b] = 1;

    const Eigen::VectorXd du = u1.values - u2.values;
    Eigen::VectorXd r = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(mesh.vertex_count()));
    const Tensor id = identity_tensor(2);
    for (std::size_t e = 0; e < mesh.triangle_count(); ++e) {
        const auto& t = mesh.triangles[e];
        const bool touches = on_boundary[t[0]] || on_boundary[t[1]] || on_boundary[t[2]];
        const Vec2 c = mesh.centroid(e);
        if (c.norm() < band_inner) {
            if (touches) throw PreconditionError("neumann_trace_error: band does not contain the boundary layer");
            continue;
        }
        for (double s : {-1.0, 0.0, 1.0}) {
            const Point x = make_point(c.x(), c.y());
            const double t1 = s + u1.at({c, e, {1.0 / 3, 1.0 / 3, 1.0 / 3}});
            const double t2 = s + u2.at({c, e, {1.0 / 3, 1.0 / 3, 1.0 / 3}});
            if ((a1.eval(x, t1) - id).norm() > 1e-12 || (a2.eval(x, t2) - id).norm() > 1e-12) {
                throw PreconditionError("neumann_trace_error: coefficient is not the identity on the band at (" +
                                        std::to_string(c.x()) + ", " + std::to_string(c.y()) + ")");
            }
        }
        if (!touches) continue;
        const Eigen::Matrix3d k = element_stiffness(
            {mesh.vertices[t[0]], mesh.vertices[t[1]], mesh.vertices[t[2]]}, Mat2::Identity());
        const Eigen::Vector3d ue(du[t[0]], du[t[1]], du[t[2]]);
        const Eigen::Vector3d re = k * ue;
        for (int i = 0; i < 3; ++i) r[t[i]] += re[i];
    }

    const FourierBasis basis = FourierBasis::on(mesh, max_mode);
    Eigen::VectorXd rb(static_cast<Eigen::Index>(mesh.boundary.size()));
    for (std::size_t i = 0; i < mesh.boundary.size(); ++i) rb[static_cast<Eigen::Index>(i)] = r[mesh.boundary[i]];
    const Eigen::VectorXd coeffs = basis.values.transpose() * rb;
    const Eigen::MatrixXd g = basis.gram(mesh);
    double sum = 0.0;
    for (std::size_t j = 0; j < basis.size(); ++j) {
        const auto jj = static_cast<Eigen::Index>(j);
        sum += basis.weight(j) * coeffs[jj] * coeffs[jj] / g(jj, jj);
    }
    return std::sqrt(sum);
}

void write_operator(std::ostream& out, const DtNOperator& op) {
    nlohmann::json j;
    j["basis"] = op.basis.max_mode;
    j["labels"] = op.basis.labels;
    std::vector<double> m;
    for (Eigen::Index r = 0; r < op.pairing.rows(); ++r) {
        for (Eigen::Index c = 0; c < op.pairing.cols(); ++c) m.push_back(op.pairing(r, c));
    }
    j["matrix"] = m;
    j["converged"] = op.converged;
    j["iterations"] = op.iterations;
    j["coefficient"] = op.coefficient;
    j["nonlinear"] = op.nonlinear;
    j["amplitude"] = op.amplitude;
    out << j.dump(2) << '\n';
}

DtNOperator read_operator(std::istream& in) {
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("malformed operator JSON: ") + e.what());
    }
    try {
        DtNOperator op;
        op.basis = FourierBasis::abstract(j.at("basis").get<int>());
        const auto n = static_cast<Eigen::Index>(op.basis.size());
        const auto m = j.at("matrix").get<std::vector<double>>();
        if (static_cast<Eigen::Index>(m.size()) != n * n) throw IoError("operator matrix has the wrong size");
        op.pairing.resize(n, n);
        for (Eigen::Index r = 0; r < n; ++r) {
            for (Eigen::Index c = 0; c < n; ++c) op.pairing(r, c) = m[static_cast<std::size_t>(r * n + c)];
        }
        op.converged = j.value("converged", std::vector<bool>(static_cast<std::size_t>(n), true));
        op.iterations = j.value("iterations", std::vector<int>(static_cast<std::size_t>(n), 0));
        op.coefficient = j.value("coefficient", std::string{});
        op.nonlinear = j.value("nonlinear", false);
        op.amplitude = j.value("amplitude", 1.0);
        return op;
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("invalid operator JSON: ") + e.what());
    }
}

void save_operator(const std::string& path, const DtNOperator& op) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    write_operator(out, op);
    if (!out) throw IoError("failed writing " + path);
}

DtNOperator load_operator(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path);
    return read_operator(in);
}

}  // namespace cloaksim
