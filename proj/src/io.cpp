#include "isrm/io.hpp"

#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include "isrm/errors.hpp"

namespace isrm {

using nlohmann::json;

namespace {

[[noreturn]] void schema(const std::string& what) { throw SpecError("schema: " + what); }

const json& member(const json& j, const char* key, const std::string& where) {
    if (!j.is_object() || !j.contains(key)) schema(where + ": missing '" + key + "'");
    return j.at(key);
}

double number(const json& j, const std::string& where) {
    if (!j.is_number()) schema(where + ": expected a number");
    return j.get<double>();
}

int integer(const json& j, const std::string& where) {
    if (!j.is_number_integer()) schema(where + ": expected an integer");
    return j.get<int>();
}

Expr expr(const json& j, int dim, const std::string& where) {
    if (j.is_number()) return Expr::constant(j.get<double>());
    if (!j.is_string()) schema(where + ": expected an expression string or number");
    return Expr::parse(j.get<std::string>(), dim);
}

Vec vec(const json& j, const std::string& where) {
    if (!j.is_array()) schema(where + ": expected an array of numbers");
    Vec v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = number(j[i], where);
    return v;
}

Mat mat(const json& j, const std::string& where) {
    if (!j.is_array() || j.empty()) schema(where + ": expected a non-empty array of rows");
    const std::size_t rows = j.size();
    const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
    Mat M(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
        if (!j[r].is_array() || j[r].size() != cols) schema(where + ": ragged matrix");
        for (std::size_t c = 0; c < cols; ++c) M(r, c) = number(j[r][c], where);
    }
    return M;
}

std::vector<std::vector<Expr>> expr_grid(const json& j, int rows, int cols, int dim, const std::string& where) {
    if (!j.is_array() || static_cast<int>(j.size()) != rows) schema(where + ": expected " + std::to_string(rows) + " rows");
    std::vector<std::vector<Expr>> g;
    for (const auto& row : j) {
        if (!row.is_array() || static_cast<int>(row.size()) != cols)
            schema(where + ": expected " + std::to_string(cols) + " columns");
        g.emplace_back();
        for (const auto& e : row) g.back().push_back(expr(e, dim, where));
    }
    return g;
}

void check_version(const json& doc) {
    if (!doc.is_object()) schema("document must be a JSON object");
    if (!doc.contains("schema_version")) schema("missing 'schema_version'");
    if (integer(doc.at("schema_version"), "schema_version") != kSchemaVersion)
        schema("unsupported schema_version (expected " + std::to_string(kSchemaVersion) + ")");
}

json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SpecError("cannot open '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw SpecError("'" + path + "' is not valid JSON: " + e.what());
    }
}

void add_expr_breaks(Breakpoints& b, const Expr& e, int dim) {
    Breakpoints extra(dim);
    for (int a = 0; a < dim; ++a) extra[a] = e.breakpoints(a);
    merge_breakpoints(b, extra);
}

LevyKernel kernel_from_json(const json& j, int m, int dim, Breakpoints& breaks) {
    const std::string kind = member(j, "kind", "rho").get<std::string>();
    auto scalar = [&](const json& e, const std::string& where) {
        const Expr x = expr(e, dim, where);
        add_expr_breaks(breaks, x, dim);
        return scalar_fn(x);
    };
    if (kind == "zero") return LevyKernel::zero(m);
    if (kind == "radial") {
        if (m != 1) schema("rho.radial needs m = 1");
        const bool symmetric = j.value("symmetric", true);
        return LevyKernel::radial(scalar(member(j, "alpha", "rho.radial"), "rho.radial.alpha"),
                                  scalar(member(j, "coeff", "rho.radial"), "rho.radial.coeff"), symmetric);
    }
    if (kind == "polar") {
        const json& dirs = member(j, "directions", "rho.polar");
        const json& weights = member(j, "weights", "rho.polar");
        if (!dirs.is_array() || !weights.is_array() || dirs.size() != weights.size() || dirs.empty())
            schema("rho.polar: one weight per direction");
        std::vector<Vec> ds;
        std::vector<ScalarFn> ws;
        for (std::size_t k = 0; k < dirs.size(); ++k) {
            ds.push_back(vec(dirs[k], "rho.polar.directions"));
            if (ds.back().size() != m) schema("rho.polar: direction of wrong dimension");
            ws.push_back(scalar(weights[k], "rho.polar.weights"));
        }
        return LevyKernel::polar(std::move(ds), std::move(ws), scalar(member(j, "alpha", "rho.polar"), "rho.polar.alpha"),
                                 scalar(member(j, "coeff", "rho.polar"), "rho.polar.coeff"));
    }
    if (kind == "atoms") {
        const json& pts = member(j, "points", "rho.atoms");
        const json& masses = member(j, "masses", "rho.atoms");
        if (!pts.is_array() || !masses.is_array() || pts.size() != masses.size())
            schema("rho.atoms: one mass per point");
        std::vector<Vec> ps;
        std::vector<ScalarFn> ms;
        for (std::size_t k = 0; k < pts.size(); ++k) {
            ps.push_back(vec(pts[k], "rho.atoms.points"));
            if (ps.back().size() != m) schema("rho.atoms: point of wrong dimension");
            ms.push_back(scalar(masses[k], "rho.atoms.masses"));
        }
        return LevyKernel::atoms(std::move(ps), std::move(ms));
    }
    if (kind == "sum") {
        const json& terms = member(j, "terms", "rho.sum");
        if (!terms.is_array()) schema("rho.sum: 'terms' must be an array");
        std::vector<LevyKernel> ks;
        for (const auto& t : terms) ks.push_back(kernel_from_json(t, m, dim, breaks));
        return LevyKernel::sum(std::move(ks));
    }
    schema("unknown rho kind '" + kind + "'");
}

IsrmSpec generic_spec(const json& doc, const QuadratureConfig&) {
    const int m = integer(member(doc, "m", "spec"), "m");
    if (m < 1) schema("m must be >= 1");
    Domain dom = domain_from_json(member(doc, "domain", "spec"));
    const int d = dom.dim();

    VecFn alpha(Vec(Vec::Zero(m)));
    if (doc.contains("alpha")) {
        const json& a = doc.at("alpha");
        if (!a.is_array() || static_cast<int>(a.size()) != m) schema("alpha must list m expressions");
        std::vector<Expr> es;
        bool constant = true;
        for (const auto& e : a) {
            es.push_back(expr(e, d, "alpha"));
            constant = constant && es.back().is_constant();
            add_expr_breaks(dom.breaks, es.back(), d);
        }
        if (constant) {
            Vec v(m);
            for (int i = 0; i < m; ++i) v[i] = es[i].eval(Point::Zero(d));
            alpha = VecFn(v);
        } else {
            alpha = VecFn(std::function<Vec(const Point&)>([es, m](const Point& s) -> Vec {
                Vec v(m);
                for (int i = 0; i < m; ++i) v[i] = es[i].eval(s);
                return v;
            }));
        }
    }

    MatFn beta(Mat(Mat::Zero(m, m)));
    if (doc.contains("beta")) {
        const auto g = expr_grid(doc.at("beta"), m, m, d, "beta");
        bool constant = true;
        for (const auto& row : g)
            for (const auto& e : row) {
                constant = constant && e.is_constant();
                add_expr_breaks(dom.breaks, e, d);
            }
        auto eval = [g, m](const Point& s) -> Mat {
            Mat B(m, m);
            for (int i = 0; i < m; ++i)
                for (int k = 0; k < m; ++k) B(i, k) = g[i][k].eval(s);
            return B;
        };
        beta = constant ? MatFn(eval(Point::Zero(d))) : MatFn(std::function<Mat(const Point&)>(eval));
    }

    LevyKernel rho = LevyKernel::zero(m);
    if (doc.contains("rho")) rho = kernel_from_json(doc.at("rho"), m, d, dom.breaks);
    return make_spec(m, std::move(dom), std::move(alpha), std::move(beta), std::move(rho));
}

IdTriplet triplet_from_json(const json& j) {
    const Vec gamma = vec(member(j, "gamma", "mu"), "mu.gamma");
    const int m = static_cast<int>(gamma.size());
    if (m < 1) schema("mu.gamma must be non-empty");
    const Mat Q = j.contains("Q") ? mat(j.at("Q"), "mu.Q") : Mat(Mat::Zero(m, m));
    if (Q.rows() != m || Q.cols() != m) schema("mu.Q must be m x m");
    LevyMeasure levy(m);
    if (j.contains("levy")) {
        Breakpoints unused;
        const LevyKernel k = kernel_from_json(j.at("levy"), m, 1, unused);
        if (!k.is_constant()) schema("mu.levy must not depend on s");
        levy = k.constant_value();
    }
    try {
        return IdTriplet(gamma, Q, levy);
    } catch (const Error& e) {
        throw SpecError(std::string("mu: ") + e.what());
    }
}

MatrixField real_field_from_json(const json& doc, int base_dim) {
    const std::string kind = member(doc, "kind", "field").get<std::string>();
    MatrixField f = MatrixField::constant(Mat::Zero(1, 1), base_dim);
    if (kind == "expression") {
        const json& entries = member(doc, "entries", "field");
        if (!entries.is_array() || entries.empty()) schema("field.entries must be a non-empty grid");
        const int m = static_cast<int>(entries.size());
        f = MatrixField::expression(expr_grid(entries, m, m, base_dim, "field.entries"), base_dim);
    } else if (kind == "constant") {
        f = MatrixField::constant(mat(member(doc, "matrix", "field"), "field.matrix"), base_dim);
    } else if (kind == "indicator") {
        f = MatrixField::indicator(set_from_json(member(doc, "set", "field"), base_dim),
                                   mat(member(doc, "matrix", "field"), "field.matrix"));
    } else if (kind == "power_law") {
        const Vec c = vec(member(doc, "center", "field"), "field.center");
        if (c.size() != base_dim) schema("field.center must have the domain dimension");
        f = MatrixField::power_law(number(member(doc, "beta", "field"), "field.beta"),
                                   mat(member(doc, "matrix", "field"), "field.matrix"), c);
    } else if (kind == "simple") {
        const json& pieces = member(doc, "pieces", "field");
        if (!pieces.is_array() || pieces.empty()) schema("field.pieces must be a non-empty array");
        std::vector<MatrixField::Piece> ps;
        for (const auto& p : pieces)
            ps.push_back({mat(member(p, "matrix", "field.pieces"), "field.pieces.matrix"),
                          set_from_json(member(p, "set", "field.pieces"), base_dim)});
        f = MatrixField::simple(std::move(ps));
    } else {
        schema("unknown field kind '" + kind + "'");
    }
    if (doc.contains("m") && integer(doc.at("m"), "field.m") != f.m()) schema("field.m does not match the matrix size");
    if (doc.contains("support")) f = f.restricted(set_from_json(doc.at("support"), base_dim));
    if (doc.contains("singular")) {
        std::vector<Point> pts;
        for (const auto& p : doc.at("singular")) {
            pts.push_back(vec(p, "field.singular"));
            if (pts.back().size() != base_dim) schema("field.singular points must have the domain dimension");
        }
        f = f.with_singular(std::move(pts));
    }
    return f;
}

}  // namespace

Domain domain_from_json(const json& j) {
    const json& bounds = member(j, "bounds", "domain");
    if (!bounds.is_array() || bounds.empty() || bounds.size() > 2) schema("domain.bounds must list 1 or 2 intervals");
    if (j.contains("dim") && integer(j.at("dim"), "domain.dim") != static_cast<int>(bounds.size()))
        schema("domain.dim does not match domain.bounds");
    std::vector<Interval> sides;
    for (const auto& b : bounds) {
        const Vec v = vec(b, "domain.bounds");
        if (v.size() != 2) schema("domain.bounds entries must be [lo, hi]");
        sides.push_back({v[0], v[1]});
    }
    const int d = static_cast<int>(sides.size());
    Domain dom = j.contains("density") ? Domain::with_density(Box(sides), expr(j.at("density"), d, "domain.density"))
                                       : Domain::lebesgue(Box(sides));
    if (j.contains("singular"))
        for (const auto& p : j.at("singular")) {
            dom.singular.push_back(vec(p, "domain.singular"));
            if (dom.singular.back().size() != d) schema("domain.singular points must have the domain dimension");
        }
    return dom;
}

MeasurableSet set_from_json(const json& j, int dim) {
    if (!j.is_array()) schema("set must be a list of boxes");
    std::vector<Box> boxes;
    for (const auto& b : j) {
        if (!b.is_array() || static_cast<int>(b.size()) != dim) schema("set boxes need one [lo, hi] per axis");
        std::vector<Interval> sides;
        for (const auto& s : b) {
            const Vec v = vec(s, "set");
            if (v.size() != 2 || !(v[1] >= v[0])) schema("set sides must be [lo, hi] with lo <= hi");
            sides.push_back({v[0], v[1]});
        }
        boxes.emplace_back(std::move(sides));
    }
    return MeasurableSet(std::move(boxes));
}

IsrmSpec spec_from_json(const json& doc, const QuadratureConfig& cfg) {
    check_version(doc);
    const std::string kind = doc.value("kind", std::string("generic"));
    IsrmSpec spec;
    try {
        if (kind == "generic") {
            spec = generic_spec(doc, cfg);
        } else if (kind == "nu_mu") {
            spec = from_nu_mu(domain_from_json(member(doc, "domain", "spec")), triplet_from_json(member(doc, "mu", "spec")),
                              cfg);
        } else if (kind == "multistable") {
            const Domain dom = domain_from_json(member(doc, "domain", "spec"));
            spec = multistable(dom, expr(member(doc, "alpha", "spec"), dom.dim(), "alpha"), cfg);
        } else if (kind == "gaussian") {
            const int m = integer(member(doc, "m", "spec"), "m");
            if (m < 1) schema("m must be >= 1");
            std::optional<Mat> B;
            if (doc.contains("B")) B = mat(doc.at("B"), "B");
            spec = gaussian(domain_from_json(member(doc, "domain", "spec")), m, B);
        } else if (kind == "sas") {
            spec = sas(domain_from_json(member(doc, "domain", "spec")), number(member(doc, "alpha", "spec"), "alpha"), cfg);
        } else {
            schema("unknown spec kind '" + kind + "'");
        }
    } catch (const json::exception& e) {
        schema(e.what());
    }
    spec.validate(7, cfg);
    return spec;
}

IsrmSpec load_spec(const std::string& path, const QuadratureConfig& cfg) { return spec_from_json(read_json(path), cfg); }

AnyField field_from_json(const json& doc, int base_dim) {
    check_version(doc);
    try {
        if (doc.value("kind", std::string()) == "complex") {
            const MatrixField re = real_field_from_json(member(doc, "re", "field"), base_dim);
            const MatrixField im = real_field_from_json(member(doc, "im", "field"), base_dim);
            return ComplexMatrixField(re, im);
        }
        return real_field_from_json(doc, base_dim);
    } catch (const json::exception& e) {
        schema(e.what());
    }
}

AnyField load_field(const std::string& path, int base_dim) { return field_from_json(read_json(path), base_dim); }

namespace {

double parse_double(const std::string& s, const std::string& what) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        throw SpecError(what + ": '" + s + "' is not a number");
    }
    if (used != s.size()) throw SpecError(what + ": '" + s + "' is not a number");
    return v;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else if (c != ' ') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

}  // namespace

MeasurableSet parse_set(const std::string& text, int dim) {
    std::vector<Box> boxes;
    for (const auto& b : split(text, '+')) {
        const auto axes = split(b, 'x');
        if (static_cast<int>(axes.size()) != dim) throw SpecError("set '" + text + "': need one lo:hi per axis");
        std::vector<Interval> sides;
        for (const auto& a : axes) {
            const auto lh = split(a, ':');
            if (lh.size() != 2) throw SpecError("set '" + text + "': sides are lo:hi");
            const double lo = parse_double(lh[0], "set"), hi = parse_double(lh[1], "set");
            if (!(hi >= lo)) throw SpecError("set '" + text + "': lo must not exceed hi");
            sides.push_back({lo, hi});
        }
        boxes.emplace_back(std::move(sides));
    }
    return MeasurableSet(std::move(boxes));
}

std::vector<Vec> parse_grid(const std::vector<std::string>& axes, int m) {
    if (axes.empty()) throw SpecError("grid: no axis given");
    if (axes.size() != 1 && static_cast<int>(axes.size()) != m) throw SpecError("grid: one tmin:tmax:steps per axis");
    std::vector<std::vector<double>> values;
    for (int a = 0; a < m; ++a) {
        const auto parts = split(axes.size() == 1 ? axes[0] : axes[a], ':');
        if (parts.size() != 3) throw SpecError("grid: expected tmin:tmax:steps");
        const double lo = parse_double(parts[0], "grid"), hi = parse_double(parts[1], "grid");
        const double steps = parse_double(parts[2], "grid");
        if (steps < 1 || steps != std::floor(steps)) throw SpecError("grid: steps must be a positive integer");
        const int n = static_cast<int>(steps);
        std::vector<double> v;
        for (int i = 0; i < n; ++i) v.push_back(n == 1 ? lo : (i == n - 1 ? hi : lo + (hi - lo) * i / (n - 1)));
        values.push_back(std::move(v));
    }
    std::vector<Vec> out;
    std::vector<std::size_t> idx(m, 0);
    while (true) {
        Vec t(m);
        for (int a = 0; a < m; ++a) t[a] = values[a][idx[a]];
        out.push_back(t);
        int a = m - 1;
        while (a >= 0 && ++idx[a] == values[a].size()) idx[a--] = 0;
        if (a < 0) break;
    }
    return out;
}

Vec parse_vector(const std::string& text, int m) {
    const auto parts = split(text, ',');
    if (static_cast<int>(parts.size()) != m) throw SpecError("vector '" + text + "': expected " + std::to_string(m) + " values");
    Vec v(m);
    for (int i = 0; i < m; ++i) v[i] = parse_double(parts[i], "vector");
    return v;
}

std::vector<Vec> parse_points(const std::string& text, int m) {
    std::vector<Vec> out;
    for (const auto& p : split(text, ';'))
        if (!p.empty()) out.push_back(parse_vector(p, m));
    return out;
}

json report_to_json(const IntegrabilityReport& rep) {
    json j;
    j["schema_version"] = kSchemaVersion;
    j["verdict"] = to_string(rep.verdict);
    j["witness"] = rep.witness;
    j["gamma_residual"] = rep.gamma_residual;
    j["Q_residual"] = rep.Q_residual;
    j["levy_mass_sequence"] = rep.levy_mass_sequence;
    j["conditions"] = json::array();
    for (const auto& c : rep.conditions)
        j["conditions"].push_back({{"name", c.name},
                                   {"verdict", to_string(c.verdict)},
                                   {"value", c.value},
                                   {"residual", c.residual},
                                   {"sequence", c.sequence}});
    j["singular"] = json::array();
    for (const auto& p : rep.singular) j["singular"].push_back(std::vector<double>(p.data(), p.data() + p.size()));
    return j;
}

json report_to_json(const ValidationReport& rep) {
    json j;
    j["schema_version"] = kSchemaVersion;
    j["pass"] = rep.pass;
    j["n_samples"] = rep.n_samples;
    j["verdict"] = to_string(rep.verdict);
    j["message"] = rep.message;
    j["probes"] = json::array();
    for (const auto& p : rep.probes)
        j["probes"].push_back({{"t", std::vector<double>(p.t.data(), p.t.data() + p.t.size())},
                               {"empirical", {p.empirical.real(), p.empirical.imag()}},
                               {"analytic", {p.analytic.real(), p.analytic.imag()}},
                               {"gap", p.gap},
                               {"band", p.band},
                               {"clt", p.clt},
                               {"truncation", p.truncation},
                               {"partition", p.partition},
                               {"pass", p.pass}});
    return j;
}

std::string format_number(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

void write_csv_header(std::ostream& os, const std::vector<std::string>& columns) {
    for (std::size_t i = 0; i < columns.size(); ++i) os << (i ? "," : "") << columns[i];
    os << '\n';
}

void write_csv_row(std::ostream& os, const std::vector<double>& values) {
    for (std::size_t i = 0; i < values.size(); ++i) os << (i ? "," : "") << format_number(values[i]);
    os << '\n';
}

void write_samples_csv(std::ostream& os, const Mat& samples) {
    std::vector<std::string> cols;
    for (Eigen::Index k = 0; k < samples.cols(); ++k) cols.push_back("x" + std::to_string(k + 1));
    write_csv_header(os, cols);
    std::vector<double> row(samples.cols());
    for (Eigen::Index i = 0; i < samples.rows(); ++i) {
        for (Eigen::Index k = 0; k < samples.cols(); ++k) row[k] = samples(i, k);
        write_csv_row(os, row);
    }
}

}  // namespace isrm
