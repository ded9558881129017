#include "mfsel/field.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "mfsel/error.hpp"
#include "mfsel/parallel.hpp"

namespace mfsel {

DecouplingField::DecouplingField(SpaceGrid space, TimeGrid time, FieldKind kind,
                                 double parameter, std::string model_name)
    : space_(std::move(space)),
      time_(time),
      kind_(kind),
      parameter_(parameter),
      model_name_(std::move(model_name)) {
  values_.assign(time_.size() * level_size(), 0.0);
}

namespace {

// Cell index and weight of x on an axis, clamped to the box.
inline void locate(const Axis& a, double x, std::size_t& cell, double& w) {
  const double h = a.spacing();
  double pos = (x - a.lower) / h;
  const double last = static_cast<double>(a.nodes - 1);
  if (!(pos > 0.0)) pos = 0.0;
  if (pos > last) pos = last;
  auto c = static_cast<std::size_t>(pos);
  if (c >= a.nodes - 1) c = a.nodes - 2;
  cell = c;
  w = pos - static_cast<double>(c);
}

}  // namespace

void DecouplingField::interpolate(double t, const double* m, double* out) const {
  const std::size_t d = dim();
  // Time weight.
  const double dt = time_.dt();
  double tp = (t - time_.t0()) / dt;
  const double last = static_cast<double>(time_.steps());
  if (!(tp > 0.0)) tp = 0.0;
  if (tp > last) tp = last;
  auto k = static_cast<std::size_t>(tp);
  if (k >= time_.steps()) k = time_.steps() - 1;
  const double wt = tp - static_cast<double>(k);

  std::size_t c0 = 0;
  double w0 = 0.0;
  locate(space_.axis(0), m[0], c0, w0);
  for (std::size_t c = 0; c < d; ++c) out[c] = 0.0;
  for (int lv = 0; lv < 2; ++lv) {
    const double wl = lv == 0 ? 1.0 - wt : wt;
    if (wl == 0.0) continue;
    const double* u = level(k + static_cast<std::size_t>(lv));
    if (d == 1) {
      const double a = u[c0];
      const double b = u[c0 + 1];
      out[0] += wl * ((1.0 - w0) * a + w0 * b);
    } else {
      std::size_t c1 = 0;
      double w1 = 0.0;
      locate(space_.axis(1), m[1], c1, w1);
      const std::size_t n1 = space_.axis(1).nodes;
      const std::size_t i00 = (c0 * n1 + c1) * 2;
      const std::size_t i01 = (c0 * n1 + c1 + 1) * 2;
      const std::size_t i10 = ((c0 + 1) * n1 + c1) * 2;
      const std::size_t i11 = ((c0 + 1) * n1 + c1 + 1) * 2;
      for (std::size_t c = 0; c < 2; ++c) {
        const double lo = (1.0 - w1) * u[i00 + c] + w1 * u[i01 + c];
        const double hi = (1.0 - w1) * u[i10 + c] + w1 * u[i11 + c];
        out[c] += wl * ((1.0 - w0) * lo + w0 * hi);
      }
    }
  }
}

Vec DecouplingField::operator()(double t, const Vec& m) const {
  Vec out(static_cast<Eigen::Index>(dim()));
  interpolate(t, m.data(), out.data());
  return out;
}

std::size_t required_substeps(const SpaceGrid& grid, double diffusion,
                              double speed, double dt, double safety) {
  const double dd = static_cast<double>(grid.dim());
  double limit = INFINITY;
  for (const auto& a : grid.axes()) {
    const double h = a.spacing();
    if (diffusion > 0.0) limit = std::min(limit, h * h / (4.0 * dd * diffusion));
    if (speed > 0.0) limit = std::min(limit, h / (2.0 * dd * speed));
  }
  if (!std::isfinite(limit)) return 1;
  const double n = std::ceil(dt / (safety * limit));
  return std::max<std::size_t>(1, static_cast<std::size_t>(n));
}

double default_half_width(const ModelSpec& spec) {
  const double g_sup = spec.g->bounds().grad_sup;
  const double f_sup =
      spec.running == RunningCost::kFull ? spec.f->bounds().grad_sup : 0.0;
  if (!std::isfinite(g_sup) || !std::isfinite(f_sup)) {
    throw Error(ErrorKind::kConfig,
                "unbounded potential gradient: the domain half width must be given");
  }
  return 2.0 * (spec.nu0.norm() + spec.T * (g_sup + f_sup + 1.0)) *
         std::exp(spec.b.norm() * spec.T);
}

namespace {

struct SchemeData {
  const SpaceGrid& grid;
  double diffusion;
  Mat b;
  bool has_drift;
  Transport transport;
  std::vector<double> source;    // per node x component
  std::vector<double> bm;        // b m per node x component
};

class CflExceeded : public std::exception {};

// Semi-discrete operator: out = D Lap u + grad u (b m - u) + b^T u + S.
// Returns the largest |b m - u| per axis seen (for the stability check).
double apply_operator(const SchemeData& s, const std::vector<double>& u,
                      std::vector<double>& out, std::size_t threads) {
  const SpaceGrid& g = s.grid;
  const std::size_t d = g.dim();
  const std::size_t n0 = g.axis(0).nodes;
  const std::size_t n1 = d == 2 ? g.axis(1).nodes : 1;
  const double inv_h[2] = {1.0 / g.axis(0).spacing(),
                           d == 2 ? 1.0 / g.axis(1).spacing() : 0.0};
  const double diff_coef[2] = {s.diffusion * inv_h[0] * inv_h[0],
                               s.diffusion * inv_h[1] * inv_h[1]};
  const std::size_t stride[2] = {n1 * d, d};
  const std::size_t count[2] = {n0, n1};

  std::vector<double> row_speed(n0, 0.0);
  parallel_for(n0, threads, [&](std::size_t i0) {
    double speed = 0.0;
    for (std::size_t i1 = 0; i1 < n1; ++i1) {
      const std::size_t node = i0 * n1 + i1;
      const std::size_t base = node * d;
      const std::size_t idx[2] = {i0, i1};
      double v[2] = {0.0, 0.0};
      for (std::size_t c = 0; c < d; ++c) {
        v[c] = s.bm[base + c] - u[base + c];
      }
      const double vnorm =
          d == 2 ? std::sqrt(v[0] * v[0] + v[1] * v[1]) : std::abs(v[0]);
      speed = std::max(speed, vnorm);
      for (std::size_t c = 0; c < d; ++c) {
        const double u0 = u[base + c];
        double axis_sum[2] = {0.0, 0.0};
        for (std::size_t a = 0; a < d; ++a) {
          const std::size_t i = idx[a];
          const std::size_t n = count[a];
          double second = 0.0;
          double slope = 0.0;
          if (i == 0) {
            slope = u[base + stride[a] + c] - u0;
          } else if (i == n - 1) {
            slope = u0 - u[base - stride[a] + c];
          } else {
            const double up = u[base + stride[a] + c];
            const double dn = u[base - stride[a] + c];
            second = (up + dn) - 2.0 * u0;
            if (s.transport == Transport::kAxisUpwind) {
              slope = v[a] > 0.0 ? up - u0 : u0 - dn;
            } else {
              axis_sum[a] = (diff_coef[a] + 0.5 * vnorm * inv_h[a]) * second +
                            0.5 * v[a] * (up - dn) * inv_h[a];
              continue;
            }
          }
          axis_sum[a] = diff_coef[a] * second + v[a] * slope * inv_h[a];
        }
        double total = d == 2 ? axis_sum[0] + axis_sum[1] : axis_sum[0];
        if (s.has_drift) {
          double btu = 0.0;
          for (std::size_t r = 0; r < d; ++r) {
            btu += s.b(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) *
                   u[base + r];
          }
          total += btu;
        }
        out[base + c] = total + s.source[base + c];
      }
    }
    row_speed[i0] = speed;
  });
  return *std::max_element(row_speed.begin(), row_speed.end());
}

struct SolveRequest {
  const ModelSpec& spec;
  FieldKind kind;
  double parameter;
  double diffusion;
  double n_players;  // +inf: no reminders
};

DecouplingField solve_field(const SolveRequest& req, const SpaceGrid& grid,
                            const TimeGrid& tgrid, const FieldSolverOptions& opts,
                            FieldDiagnostics* diag) {
  const ModelSpec& spec = req.spec;
  spec.validate();
  if (grid.dim() != spec.dim) {
    throw Error(ErrorKind::kInvalidInput, "space grid dimension differs from the model");
  }
  if (tgrid.T() != spec.T) {
    throw Error(ErrorKind::kInvalidInput, "time grid must end at the model horizon");
  }
  const std::size_t d = grid.dim();
  const std::size_t nodes = grid.node_count();
  const std::size_t n1 = d == 2 ? grid.axis(1).nodes : 1;

  SchemeData s{grid, req.diffusion, spec.b, spec.has_drift(), opts.transport, {}, {}};
  s.source.assign(nodes * d, 0.0);
  s.bm.assign(nodes * d, 0.0);
  DecouplingField field(grid, tgrid, req.kind, req.parameter, spec.name);
  double* terminal = field.level(tgrid.steps());
  Vec m(static_cast<Eigen::Index>(d));
  for (std::size_t node = 0; node < nodes; ++node) {
    m(0) = grid.coord(0, d == 2 ? node / n1 : node);
    if (d == 2) m(1) = grid.coord(1, node % n1);
    const Vec src = grad_FN(spec, req.n_players, m);
    const Vec term = grad_GN(spec, req.n_players, m);
    const Vec bm = spec.b * m;
    for (std::size_t c = 0; c < d; ++c) {
      const auto ci = static_cast<Eigen::Index>(c);
      s.source[node * d + c] = src(ci);
      terminal[node * d + c] = term(ci);
      s.bm[node * d + c] = bm(ci);
    }
  }
  for (std::size_t i = 0; i < nodes * d; ++i) {
    if (!std::isfinite(terminal[i]) || !std::isfinite(s.source[i])) {
      throw Error(ErrorKind::kPdeDiverged, "non-finite terminal or source data");
    }
  }

  double min_h = INFINITY;
  for (const auto& a : grid.axes()) min_h = std::min(min_h, a.spacing());
  const double dd = static_cast<double>(d);
  const double max_diffusion_ratio = 1.0 / (4.0 * dd);
  const double max_transport_ratio = 1.0 / (2.0 * dd);

  double speed0 = 0.0;
  for (std::size_t node = 0; node < nodes; ++node) {
    double v2 = 0.0;
    for (std::size_t c = 0; c < d; ++c) {
      const double v = s.bm[node * d + c] - terminal[node * d + c];
      v2 += v * v;
    }
    speed0 = std::max(speed0, std::sqrt(v2));
  }

  const bool automatic = opts.substeps == 0;
  std::size_t substeps =
      automatic ? required_substeps(grid, req.diffusion, 1.25 * speed0 + 1e-12,
                                    tgrid.dt(), opts.safety)
                : opts.substeps;

  std::vector<double> u(nodes * d);
  std::vector<double> u1(nodes * d);
  std::vector<double> k1(nodes * d);
  for (int attempt = 0; attempt < 8; ++attempt) {
    const double tau = tgrid.dt() / static_cast<double>(substeps);
    const double diffusion_ratio = req.diffusion * tau / (min_h * min_h);
    if (diffusion_ratio > max_diffusion_ratio * (1.0 + 1e-12)) {
      if (automatic) {
        substeps *= 2;
        continue;
      }
      std::ostringstream os;
      os << "diffusion ratio D dt/dx^2 = " << diffusion_ratio << " exceeds "
         << max_diffusion_ratio;
      throw Error(ErrorKind::kCflViolation, os.str());
    }
    double worst_transport = 0.0;
    try {
      std::copy(terminal, terminal + nodes * d, u.begin());
      for (std::size_t k = tgrid.steps(); k-- > 0;) {
        for (std::size_t sub = 0; sub < substeps; ++sub) {
          const double speed = apply_operator(s, u, k1, opts.threads);
          const double ratio = speed * tau / min_h;
          worst_transport = std::max(worst_transport, ratio);
          if (ratio > max_transport_ratio) throw CflExceeded();
          for (std::size_t i = 0; i < u.size(); ++i) u1[i] = u[i] + tau * k1[i];
          apply_operator(s, u1, k1, opts.threads);
          for (std::size_t i = 0; i < u.size(); ++i) {
            u[i] = 0.5 * u[i] + 0.5 * (u1[i] + tau * k1[i]);
          }
        }
        for (double x : u) {
          if (!std::isfinite(x)) {
            throw Error(ErrorKind::kPdeDiverged,
                        "non-finite field value at t=" + std::to_string(tgrid.at(k)));
          }
        }
        std::copy(u.begin(), u.end(), field.level(k));
      }
    } catch (const CflExceeded&) {
      if (automatic) {
        substeps *= 2;
        continue;
      }
      std::ostringstream os;
      os << "transport ratio |bm - u| dt/dx = " << worst_transport << " exceeds "
         << max_transport_ratio;
      throw Error(ErrorKind::kCflViolation, os.str());
    }
    if (diag != nullptr) {
      diag->substeps = substeps;
      diag->diffusion_ratio = diffusion_ratio;
      diag->transport_ratio = worst_transport;
    }
    return field;
  }
  throw Error(ErrorKind::kCflViolation, "could not find a stable substep count");
}

}  // namespace

DecouplingField solve_field_N(const ModelSpec& spec, double n_players,
                              const SpaceGrid& grid, const TimeGrid& tgrid,
                              const FieldSolverOptions& opts, FieldDiagnostics* diag) {
  spec.validate_stochastic();
  if (!(n_players >= 1.0)) {
    throw Error(ErrorKind::kInvalidParameter, "N must be >= 1");
  }
  const double reminders = opts.zero_reminders ? INFINITY : n_players;
  const double diffusion =
      std::isinf(n_players) ? 0.0 : spec.sigma * spec.sigma / (2.0 * n_players);
  SolveRequest req{spec, FieldKind::kNPlayer, n_players, diffusion, reminders};
  return solve_field(req, grid, tgrid, opts, diag);
}

DecouplingField solve_field_eps(const ModelSpec& spec, double eps,
                                const SpaceGrid& grid, const TimeGrid& tgrid,
                                const FieldSolverOptions& opts, FieldDiagnostics* diag) {
  if (!(eps > 0.0) || !std::isfinite(eps)) {
    throw Error(ErrorKind::kInvalidParameter, "eps must be > 0");
  }
  SolveRequest req{spec, FieldKind::kCommonNoise, eps, 0.5 * eps * eps, INFINITY};
  return solve_field(req, grid, tgrid, opts, diag);
}

Vec RiccatiFieldOracle::operator()(double t, const Vec& m) const {
  double pos = (t - grid.t0()) / grid.dt();
  pos = std::clamp(pos, 0.0, static_cast<double>(grid.steps()));
  auto k = std::min(static_cast<std::size_t>(pos), grid.steps() - 1);
  const double w = pos - static_cast<double>(k);
  return (1.0 - w) * at_node(k, m) + w * at_node(k + 1, m);
}

RiccatiFieldOracle riccati_field_oracle(const ModelSpec& spec, double n_players,
                                        const TimeGrid& grid) {
  spec.validate();
  const auto qf = spec.f->quadratic_form();
  const auto qg = spec.g->quadratic_form();
  if (!qf || !qg) {
    throw Error(ErrorKind::kInvalidOracle, "riccati oracle needs quadratic f and g");
  }
  const double inv = std::isinf(n_players) ? 0.0 : 1.0 / n_players;
  const auto d = static_cast<Eigen::Index>(spec.dim);
  const Mat eye = Mat::Identity(d, d);
  Mat a_run = Mat::Zero(d, d);
  Vec a_lin = Vec::Zero(d);
  if (spec.running == RunningCost::kFull) {
    a_run = (1.0 + qf->curvature * inv) * (1.0 + qf->curvature) * eye;
    a_lin = (1.0 + qf->curvature * inv) * qf->linear;
  }
  const Mat b_term = (1.0 + qg->curvature * inv) * (1.0 + qg->curvature) * eye;
  const Vec b_lin = (1.0 + qg->curvature * inv) * qg->linear;

  // P on a doubled grid so RK4 for r sees P at half steps.
  const TimeGrid fine(grid.t0(), grid.T(), 2 * grid.steps());
  const auto p_fine = riccati_backward(spec.b, a_run, b_term, fine);

  RiccatiFieldOracle o{grid, {}, {}};
  o.P.resize(grid.size());
  o.r.resize(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) o.P[k] = p_fine[2 * k];
  const Mat bt = spec.b.transpose();
  auto rhs = [&](const Mat& p, const Vec& r) -> Vec { return p * r - bt * r - a_lin; };
  const double h = -grid.dt();
  o.r[grid.steps()] = b_lin;
  for (std::size_t k = grid.steps(); k > 0; --k) {
    const Vec& r = o.r[k];
    const Mat& p_hi = p_fine[2 * k];
    const Mat& p_mid = p_fine[2 * k - 1];
    const Mat& p_lo = p_fine[2 * k - 2];
    const Vec s1 = rhs(p_hi, r);
    const Vec s2 = rhs(p_mid, r + 0.5 * h * s1);
    const Vec s3 = rhs(p_mid, r + 0.5 * h * s2);
    const Vec s4 = rhs(p_lo, r + h * s3);
    o.r[k - 1] = r + (h / 6.0) * (s1 + 2.0 * s2 + 2.0 * s3 + s4);
  }
  return o;
}

namespace {

static_assert(std::endian::native == std::endian::little,
              "field files are written in host order");

constexpr char kMagic[8] = {'M', 'F', 'S', 'E', 'L', 'F', 'L', 'D'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ostream& os, T value) {
  os.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
  T value{};
  is.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!is) throw Error(ErrorKind::kIo, "truncated field file");
  return value;
}

}  // namespace

void write_field_binary(const DecouplingField& field, std::ostream& os) {
  os.write(kMagic, sizeof(kMagic));
  put<std::uint32_t>(os, kVersion);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(field.dim()));
  for (const auto& a : field.space().axes()) {
    put<double>(os, a.lower);
    put<double>(os, a.upper);
    put<std::uint64_t>(os, a.nodes);
  }
  put<double>(os, field.time().t0());
  put<double>(os, field.time().T());
  put<std::uint64_t>(os, field.time().steps());
  put<std::uint8_t>(os, static_cast<std::uint8_t>(field.kind()));
  put<double>(os, field.parameter());
  put<std::uint32_t>(os, static_cast<std::uint32_t>(field.model_name().size()));
  os.write(field.model_name().data(),
           static_cast<std::streamsize>(field.model_name().size()));
  os.write(reinterpret_cast<const char*>(field.values().data()),
           static_cast<std::streamsize>(field.values().size() * sizeof(double)));
  if (!os) throw Error(ErrorKind::kIo, "failed to write field");
}

DecouplingField read_field_binary(std::istream& is) {
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw Error(ErrorKind::kIo, "not a field file");
  }
  if (get<std::uint32_t>(is) != kVersion) {
    throw Error(ErrorKind::kIo, "unsupported field file version");
  }
  const auto dim = get<std::uint32_t>(is);
  if (dim < 1 || dim > 2) throw Error(ErrorKind::kIo, "bad field dimension");
  std::vector<Axis> axes(dim);
  for (auto& a : axes) {
    a.lower = get<double>(is);
    a.upper = get<double>(is);
    a.nodes = get<std::uint64_t>(is);
  }
  const double t0 = get<double>(is);
  const double T = get<double>(is);
  const auto steps = get<std::uint64_t>(is);
  const auto kind = get<std::uint8_t>(is);
  if (kind > 1) throw Error(ErrorKind::kIo, "bad field kind");
  const double parameter = get<double>(is);
  const auto name_len = get<std::uint32_t>(is);
  std::string name(name_len, '\0');
  is.read(name.data(), name_len);
  if (!is) throw Error(ErrorKind::kIo, "truncated field file");
  DecouplingField field(SpaceGrid(std::move(axes)), TimeGrid(t0, T, steps),
                        static_cast<FieldKind>(kind), parameter, std::move(name));
  auto& v = field.values();
  is.read(reinterpret_cast<char*>(v.data()),
          static_cast<std::streamsize>(v.size() * sizeof(double)));
  if (!is) throw Error(ErrorKind::kIo, "truncated field payload");
  return field;
}

void save_field(const DecouplingField& field, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorKind::kIo, "cannot open " + path);
  write_field_binary(field, os);
}

DecouplingField load_field(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorKind::kIo, "cannot open " + path);
  return read_field_binary(is);
}

void write_field_slice_csv(const DecouplingField& field, std::ostream& os,
                           std::size_t time_stride) {
  time_stride = std::max<std::size_t>(1, time_stride);
  const auto& g = field.space();
  const std::size_t n0 = g.axis(0).nodes;
  os.precision(17);
  if (field.dim() == 1) {
    os << "t,m,u\n";
  } else {
    os << "t,m1,m2,u1,u2\n";
  }
  std::size_t mid = 0;
  if (field.dim() == 2) {
    // Node closest to m2 = 0.
    const auto& c = g.coords(1);
    for (std::size_t i = 1; i < c.size(); ++i) {
      if (std::abs(c[i]) < std::abs(c[mid])) mid = i;
    }
  }
  for (std::size_t k = 0; k < field.time().size(); k += time_stride) {
    const double t = field.time().at(k);
    for (std::size_t i = 0; i < n0; ++i) {
      if (field.dim() == 1) {
        os << t << ',' << g.coord(0, i) << ',' << field.node_value(k, i, 0, 0)
           << '\n';
      } else {
        os << t << ',' << g.coord(0, i) << ',' << g.coord(1, mid) << ','
           << field.node_value(k, i, mid, 0) << ','
           << field.node_value(k, i, mid, 1) << '\n';
      }
    }
  }
}

}  // namespace mfsel
