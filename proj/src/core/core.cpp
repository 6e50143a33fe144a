#include "potts/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "potts/errors.hpp"

namespace potts {

namespace {

std::string fmt(double v)
{
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

bool all_finite(const Matrix& m)
{
    return m.allFinite();
}

double min_eigenvalue(const Matrix& sym)
{
    if (sym.rows() == 0) return 0.0;
    Eigen::SelfAdjointEigenSolver<Matrix> es(sym, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

}  // namespace

StateDistribution StateDistribution::from(std::vector<double> d)
{
    if (d.empty()) throw MalformedInput("state distribution needs at least one state");
    double total = 0.0;
    for (double v : d) {
        if (!std::isfinite(v)) throw MalformedInput("state distribution has a non-finite entry");
        if (v < 0.0) throw ValidationError("state distribution has a negative entry " + fmt(v));
        total += v;
    }
    if (std::abs(total - 1.0) > kSumTolerance)
        throw ValidationError("state distribution sums to " + fmt(total) + ", not 1");
    StateDistribution s;
    s.d_ = std::move(d);
    return s;
}

StateDistribution StateDistribution::uniform(int kappa)
{
    if (kappa < 1) throw MalformedInput("kappa must be positive");
    std::vector<double> d(static_cast<std::size_t>(kappa), 1.0 / kappa);
    StateDistribution s;
    s.d_ = std::move(d);
    return s;
}

StateDistribution StateDistribution::from_counts(const std::vector<int>& counts)
{
    if (counts.empty()) throw MalformedInput("state distribution needs at least one state");
    int n = 0;
    for (int c : counts) {
        if (c < 0) throw ValidationError("negative state count");
        n += c;
    }
    if (n == 0) throw ValidationError("state counts sum to zero");
    StateDistribution s;
    s.d_.reserve(counts.size());
    for (int c : counts) s.d_.push_back(static_cast<double>(c) / n);
    s.resolution_ = n;
    return s;
}

bool StateDistribution::representable(int n) const
{
    if (n < 1) return false;
    int total = 0;
    for (double v : d_) {
        const double c = v * n;
        const double r = std::round(c);
        if (std::abs(c - r) > 1e-9) return false;
        total += static_cast<int>(r);
    }
    return total == n;
}

std::vector<int> StateDistribution::counts(int n) const
{
    if (!representable(n)) throw ValidationError("distribution is not representable with " + std::to_string(n) + " sites");
    std::vector<int> c;
    c.reserve(d_.size());
    for (double v : d_) c.push_back(static_cast<int>(std::round(v * n)));
    return c;
}

Matrix StateDistribution::diag() const
{
    Vector v(kappa());
    for (int k = 0; k < kappa(); ++k) v(k) = d_[static_cast<std::size_t>(k)];
    return v.asDiagonal();
}

std::string to_string(GramViolation v)
{
    switch (v) {
    case GramViolation::none: return "none";
    case GramViolation::asymmetric: return "asymmetric";
    case GramViolation::negative_eigenvalue: return "negative_eigenvalue";
    case GramViolation::negative_entry: return "negative_entry";
    case GramViolation::constraint_mismatch: return "constraint_mismatch";
    }
    return "unknown";
}

GramCheck validate_gram(const Matrix& m, const GramFlags& flags)
{
    if (m.rows() == 0 || m.rows() != m.cols()) throw MalformedInput("Gram matrix must be square and non-empty");
    if (!all_finite(m)) throw MalformedInput("Gram matrix has non-finite entries");

    GramCheck out;
    const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
    if (asym > kSymmetryTolerance) {
        out.violation = GramViolation::asymmetric;
        out.value = asym;
        out.detail = "max |m - m^T| = " + fmt(asym);
        return out;
    }
    const Matrix sym = 0.5 * (m + m.transpose());
    const double lmin = min_eigenvalue(sym);
    if (lmin < -kPsdTolerance) {
        out.violation = GramViolation::negative_eigenvalue;
        out.value = lmin;
        out.detail = "smallest eigenvalue " + fmt(lmin);
        return out;
    }
    if (flags.nonnegative) {
        const double emin = sym.minCoeff();
        if (emin < -kEntryTolerance) {
            out.violation = GramViolation::negative_entry;
            out.value = emin;
            out.detail = "smallest entry " + fmt(emin);
            return out;
        }
    }
    if (flags.constraint) {
        const StateDistribution& d = *flags.constraint;
        if (d.kappa() != sym.rows()) throw MalformedInput("constraint distribution has the wrong number of states");
        for (int k = 0; k < d.kappa(); ++k) {
            const double row = sym.row(k).sum();
            if (std::abs(row - d[k]) > kConstraintTolerance) {
                out.violation = GramViolation::constraint_mismatch;
                out.value = row - d[k];
                out.detail = "row " + std::to_string(k) + " sums to " + fmt(row) + ", expected " + fmt(d[k]);
                return out;
            }
        }
    }
    GramMatrix g;
    g.m_ = sym;
    g.nonnegative_ = flags.nonnegative;
    g.constrained_ = flags.constraint != nullptr;
    out.gram = std::move(g);
    return out;
}

GramCheck lift_reduced(const StateDistribution& d, const Matrix& reduced)
{
    const int kappa = d.kappa();
    if (reduced.rows() != kappa - 1 || reduced.cols() != kappa - 1)
        throw MalformedInput("reduced block must be (kappa-1)x(kappa-1)");
    if (!reduced.allFinite()) throw MalformedInput("reduced block has non-finite entries");
    if (kappa > 1 && (reduced - reduced.transpose()).cwiseAbs().maxCoeff() > kSymmetryTolerance)
        throw MalformedInput("reduced block is not symmetric");

    const int last = kappa - 1;
    Matrix full = Matrix::Zero(kappa, kappa);
    full.topLeftCorner(last, last) = reduced;
    double corner = d[last];
    for (int k = 0; k < last; ++k) {
        const double edge = d[k] - reduced.row(k).sum();
        full(k, last) = edge;
        full(last, k) = edge;
        corner -= d[k];
    }
    corner += reduced.sum();
    full(last, last) = corner;
    return validate_gram(full, GramFlags{false, &d});
}

MonotonePath MonotonePath::make(const StateDistribution& d, std::vector<double> x, std::vector<Matrix> gammas)
{
    const int kappa = d.kappa();
    if (x.size() < 2) throw MalformedInput("path needs at least one level (x_0 and x_r)");
    if (gammas.size() != x.size()) throw MalformedInput("path needs one Gram matrix per x value");
    for (const Matrix& g : gammas)
        if (g.rows() != kappa || g.cols() != kappa) throw MalformedInput("path matrix has the wrong dimension");
    for (double v : x)
        if (!std::isfinite(v)) throw MalformedInput("path has a non-finite x value");

    if (x.front() < 0.0) throw ValidationError("x_0 is negative");
    for (std::size_t p = 1; p < x.size(); ++p)
        if (x[p] < x[p - 1]) throw ValidationError("x is decreasing at level " + std::to_string(p));
    if (std::abs(x.back() - 1.0) > kSumTolerance) throw ValidationError("x_r must equal 1");
    x.back() = 1.0;

    if (gammas.front().cwiseAbs().maxCoeff() > kSymmetryTolerance) throw ValidationError("gamma_0 must be zero");
    gammas.front().setZero();
    const Matrix dd = d.diag();
    if ((gammas.back() - dd).cwiseAbs().maxCoeff() > kSymmetryTolerance)
        throw ValidationError("gamma_r must equal diag(d)");
    gammas.back() = dd;

    for (std::size_t p = 0; p < gammas.size(); ++p) {
        GramCheck c = validate_gram(gammas[p]);
        if (!c) throw ValidationError("gamma_" + std::to_string(p) + ": " + to_string(c.violation) + " (" + c.detail + ")");
        gammas[p] = c.gram->matrix();
    }
    for (std::size_t p = 1; p < gammas.size(); ++p) {
        const double lmin = min_eigenvalue(gammas[p] - gammas[p - 1]);
        if (lmin < -kPsdTolerance)
            throw ValidationError("increment " + std::to_string(p) + " is not PSD (eigenvalue " + fmt(lmin) + ")");
    }

    MonotonePath path;
    path.d_ = d;
    path.x_ = std::move(x);
    path.gammas_ = std::move(gammas);
    return path;
}

MonotonePath MonotonePath::one_step(const StateDistribution& d, double x0)
{
    return make(d, {x0, 1.0}, {Matrix::Zero(d.kappa(), d.kappa()), d.diag()});
}

Matrix MonotonePath::operator()(double t) const
{
    if (t <= 0.0) return gammas_.front();
    for (std::size_t p = 0; p < x_.size(); ++p)
        if (t <= x_[p]) return gammas_[p];
    return gammas_.back();
}

double MonotonePath::integrated_hs_norm_sq() const
{
    double s = 0.0;
    for (int p = 0; p <= levels(); ++p) s += (x_at(p) - x_at(p - 1)) * hs_norm_sq(gamma(p));
    return s;
}

MonotonePath MonotonePath::collapsed() const
{
    MonotonePath out;
    out.d_ = d_;
    out.x_.push_back(x_.front());
    out.gammas_.push_back(gammas_.front());
    const int r = levels();
    for (int p = 1; p < r; ++p) {
        if (x_at(p) == x_at(p - 1)) continue;
        out.x_.push_back(x_at(p));
        out.gammas_.push_back(gamma(p));
    }
    out.x_.push_back(x_.back());
    out.gammas_.push_back(gammas_.back());
    return out;
}

LagrangeMultipliers LagrangeMultipliers::zeros(int kappa)
{
    if (kappa < 1) throw MalformedInput("kappa must be positive");
    LagrangeMultipliers l;
    l.lambda_.assign(static_cast<std::size_t>(kappa - 1), 0.0);
    return l;
}

LagrangeMultipliers LagrangeMultipliers::from(int kappa, std::vector<double> lambda)
{
    if (kappa < 1) throw MalformedInput("kappa must be positive");
    if (lambda.size() != static_cast<std::size_t>(kappa - 1))
        throw MalformedInput("expected " + std::to_string(kappa - 1) + " Lagrange multipliers, got " +
                             std::to_string(lambda.size()));
    for (double v : lambda)
        if (!std::isfinite(v)) throw MalformedInput("Lagrange multiplier is not finite");
    LagrangeMultipliers l;
    l.lambda_ = std::move(lambda);
    return l;
}

Matrix psd_factor(const Matrix& c)
{
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (c + c.transpose()));
    const Vector root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * root.asDiagonal();
}

double entrywise_l1(const Matrix& m)
{
    return m.cwiseAbs().sum();
}

double hs_norm_sq(const Matrix& m)
{
    return m.squaredNorm();
}

namespace {

void require_compatible(const StateDistribution& a, const StateDistribution& b)
{
    if (a.kappa() != b.kappa()) throw MalformedInput("paths have different numbers of states");
    for (int k = 0; k < a.kappa(); ++k)
        if (std::abs(a[k] - b[k]) > kConstraintTolerance) throw MalformedInput("paths have different distributions d");
}

std::vector<double> merged_breakpoints(const std::vector<double>& a, const std::vector<double>& b)
{
    std::vector<double> u{0.0};
    u.insert(u.end(), a.begin(), a.end());
    u.insert(u.end(), b.begin(), b.end());
    std::sort(u.begin(), u.end());
    u.erase(std::unique(u.begin(), u.end()), u.end());
    return u;
}

void check_grid(std::span<const double> grid, std::span<const double> anchors)
{
    if (anchors.size() != grid.size() + 1) throw MalformedInput("need exactly one anchor per grid cell");
    double prev = 0.0;
    for (double g : grid) {
        if (!std::isfinite(g) || g <= prev || g >= 1.0) throw MalformedInput("grid must be strictly increasing inside (0,1)");
        prev = g;
    }
    for (std::size_t p = 0; p < anchors.size(); ++p) {
        const double lo = p == 0 ? 0.0 : grid[p - 1];
        const double hi = p == grid.size() ? 1.0 : grid[p];
        if (!(anchors[p] > lo && anchors[p] <= hi))
            throw ValidationError("anchor " + std::to_string(p) + " lies outside its cell");
    }
}

MonotonePath assemble(const StateDistribution& d, std::span<const double> grid, const std::vector<Matrix>& values)
{
    const int kappa = d.kappa();
    std::vector<double> x;
    std::vector<Matrix> g;
    if (values.front().cwiseAbs().maxCoeff() > 0.0) {
        x.push_back(0.0);
        g.push_back(Matrix::Zero(kappa, kappa));
    }
    for (std::size_t p = 0; p < values.size(); ++p) {
        x.push_back(p < grid.size() ? grid[p] : 1.0);
        g.push_back(values[p]);
    }
    const Matrix dd = d.diag();
    if ((values.back() - dd).cwiseAbs().maxCoeff() > kSymmetryTolerance) {
        x.push_back(1.0);
        g.push_back(dd);
    }
    return MonotonePath::make(d, std::move(x), std::move(g));
}

}  // namespace

double path_delta(const MonotonePath& a, const MonotonePath& b)
{
    require_compatible(a.distribution(), b.distribution());
    const std::vector<double> u = merged_breakpoints(a.x(), b.x());
    double s = 0.0;
    for (std::size_t j = 1; j < u.size(); ++j) s += (u[j] - u[j - 1]) * entrywise_l1(a(u[j]) - b(u[j]));
    return s;
}

Discretization discretize_path(const MonotonePath& p, std::span<const double> grid, std::span<const double> anchors)
{
    check_grid(grid, anchors);
    std::vector<Matrix> values;
    values.reserve(anchors.size());
    for (double t : anchors) values.push_back(p(t));
    MonotonePath out = assemble(p.distribution(), grid, values);

    const std::vector<double> u = merged_breakpoints(p.x(), out.x());
    double bound = 0.0;
    for (std::size_t j = 1; j < u.size(); ++j)
        bound += (u[j] - u[j - 1]) * std::abs(p(u[j]).trace() - out(u[j]).trace());
    return {std::move(out), p.kappa() * bound};
}

Discretization discretize_path(const PathProbe& probe, const StateDistribution& d, std::span<const double> grid,
                               std::span<const double> anchors, int samples_per_cell)
{
    check_grid(grid, anchors);
    if (samples_per_cell < 1) throw MalformedInput("samples_per_cell must be positive");
    std::vector<Matrix> values;
    values.reserve(anchors.size());
    for (double t : anchors) {
        Matrix v = probe(t);
        if (v.rows() != d.kappa() || v.cols() != d.kappa()) throw MalformedInput("probe returned a matrix of the wrong size");
        values.push_back(std::move(v));
    }
    MonotonePath out = assemble(d, grid, values);

    double bound = 0.0;
    for (std::size_t p = 0; p < anchors.size(); ++p) {
        const double lo = p == 0 ? 0.0 : grid[p - 1];
        const double hi = p == grid.size() ? 1.0 : grid[p];
        const double h = (hi - lo) / samples_per_cell;
        const double target = values[p].trace();
        for (int s = 0; s < samples_per_cell; ++s) bound += h * std::abs(probe(lo + (s + 0.5) * h).trace() - target);
    }
    return {std::move(out), d.kappa() * bound};
}

StateDistribution round_distribution(const StateDistribution& d, int n)
{
    if (n < 1) throw MalformedInput("N must be at least 1");
    const int kappa = d.kappa();
    std::vector<int> counts(static_cast<std::size_t>(kappa));
    std::vector<double> frac(static_cast<std::size_t>(kappa));
    int assigned = 0;
    for (int k = 0; k < kappa; ++k) {
        const double c = d[k] * n;
        const double f = std::floor(c);
        counts[static_cast<std::size_t>(k)] = static_cast<int>(f);
        frac[static_cast<std::size_t>(k)] = d[k] == 0.0 ? -1.0 : c - f;
        assigned += static_cast<int>(f);
    }
    std::vector<int> order(static_cast<std::size_t>(kappa));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return frac[static_cast<std::size_t>(a)] > frac[static_cast<std::size_t>(b)]; });
    for (int i = 0; assigned < n; ++i, ++assigned) counts[static_cast<std::size_t>(order[static_cast<std::size_t>(i % kappa)])] += 1;
    return StateDistribution::from_counts(counts);
}

}  // namespace potts
