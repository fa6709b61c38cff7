#include "branchwave/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

#include "branchwave/errors.hpp"

namespace branchwave {

void CoveringSpec::validate() const {
  if (num_sheets < 2) {
    throw Error(ErrorKind::InvalidConfig, "num_sheets must be >= 2, got " + std::to_string(num_sheets));
  }
}

int CoveringSpec::monodromy(int sheet, int upward_crossings) const {
  const int n = num_sheets;
  int r = (sheet + upward_crossings) % n;
  return r < 0 ? r + n : r;
}

bool CoveringSpec::on_open_cut(Vec2 p) const {
  return p.y == 0.0 && p.x > branch_minus.x && p.x < branch_plus.x;
}

bool CoveringSpec::is_branch_point(Vec2 p) const {
  return (p.x == branch_minus.x && p.y == branch_minus.y) ||
         (p.x == branch_plus.x && p.y == branch_plus.y);
}

void validate_point(const SheetPoint& p, const CoveringSpec& spec) {
  if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
    throw Error(ErrorKind::InvalidPoint, "non-finite coordinates");
  }
  if (p.sheet < 0 || p.sheet >= spec.num_sheets) {
    throw Error(ErrorKind::InvalidPoint, "sheet index " + std::to_string(p.sheet) + " out of range");
  }
  if (spec.is_branch_point(p.planar())) {
    throw Error(ErrorKind::InvalidPoint, "branch points are not points of the covering");
  }
}

SheetPoint canonicalize(const SheetPoint& p, const CoveringSpec& spec) {
  if (spec.on_open_cut(p.planar())) return {p.x, -kCutNudge, p.sheet};
  return p;
}

int crossing_parity(Vec2 p1, Vec2 p2, const CoveringSpec& spec) {
  if (spec.on_open_cut(p1) || spec.on_open_cut(p2)) {
    throw Error(ErrorKind::EndpointOnCut, "segment endpoint lies on the open cut");
  }
  if (spec.is_branch_point(p1) || spec.is_branch_point(p2)) {
    throw Error(ErrorKind::SegmentThroughBranchPoint, "segment endpoint is a branch point");
  }
  const double lo = spec.branch_minus.x, hi = spec.branch_plus.x;
  if (p1.y == 0.0 && p2.y == 0.0) {
    const double a = std::min(p1.x, p2.x), b = std::max(p1.x, p2.x);
    if ((a <= lo && lo <= b) || (a <= hi && hi <= b)) {
      throw Error(ErrorKind::SegmentThroughBranchPoint, "segment runs along the cut line through a branch point");
    }
    return 0;
  }
  if (p1.y == 0.0 || p2.y == 0.0) return 0;  // touches y = 0 outside the cut
  if ((p1.y > 0.0) == (p2.y > 0.0)) return 0;
  // Intersection abscissa x* = num / den, compared without dividing.
  const double num = p1.x * p2.y - p2.x * p1.y;
  const double den = p2.y - p1.y;
  const double slack = 4.0 * std::numeric_limits<double>::epsilon() *
                       (std::abs(p1.x * p2.y) + std::abs(p2.x * p1.y) + std::abs(den));
  const double s = den > 0 ? 1.0 : -1.0;
  const double lo_gap = s * num - lo * std::abs(den);  // sign of x* - lo
  const double hi_gap = s * num - hi * std::abs(den);  // sign of x* - hi
  if (std::abs(lo_gap) <= slack || std::abs(hi_gap) <= slack) {
    throw Error(ErrorKind::SegmentThroughBranchPoint, "segment passes through a branch point");
  }
  return (lo_gap > 0.0 && hi_gap < 0.0) ? 1 : 0;
}

int signed_crossing(Vec2 p1, Vec2 p2, const CoveringSpec& spec) {
  const int c = crossing_parity(p1, p2, spec);
  return p2.y > p1.y ? c : -c;
}

const char* route_name(Route r) {
  switch (r) {
    case Route::Direct: return "direct";
    case Route::ViaMinus: return "via_q_minus";
    case Route::ViaPlus: return "via_q_plus";
    case Route::ViaBoth: return "via_both";
  }
  return "unknown";
}

DistanceResult geodesic_distance_detail(const SheetPoint& a, const SheetPoint& b,
                                        const CoveringSpec& spec) {
  spec.validate();
  validate_point(a, spec);
  validate_point(b, spec);
  const SheetPoint p1 = canonicalize(a, spec);
  const SheetPoint p2 = canonicalize(b, spec);
  const Vec2 qm = spec.branch_minus, qp = spec.branch_plus;

  DistanceResult best;
  best.value = distance(p1.planar(), qm) + distance(qm, p2.planar());
  best.route = Route::ViaMinus;
  const double via_plus = distance(p1.planar(), qp) + distance(qp, p2.planar());
  if (via_plus < best.value) {
    best.value = via_plus;
    best.route = Route::ViaPlus;
  }

  int crossing = 0;
  try {
    crossing = signed_crossing(p1.planar(), p2.planar(), spec);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::SegmentThroughBranchPoint) throw;
    crossing = signed_crossing({p1.x, p1.y - kCutNudge}, {p2.x, p2.y - kCutNudge}, spec);
  }
  if (spec.monodromy(p1.sheet, crossing) == p2.sheet) {
    const double direct = distance(p1.planar(), p2.planar());
    if (direct <= best.value) {
      best.value = direct;
      best.route = Route::Direct;
    }
  }

  if (spec.num_sheets >= 3) {
    const double span = distance(qm, qp);
    const double both = std::min(distance(p1.planar(), qm) + span + distance(qp, p2.planar()),
                                 distance(p1.planar(), qp) + span + distance(qm, p2.planar()));
    if (both < best.value) {
      best.value = both;
      best.route = Route::ViaBoth;
    } else if (both - best.value <= 1e-15 * std::max(1.0, best.value)) {
      best.two_branch_tie = true;
    }
  }
  return best;
}

double geodesic_distance(const SheetPoint& p1, const SheetPoint& p2, const CoveringSpec& spec) {
  return geodesic_distance_detail(p1, p2, spec).value;
}

std::pair<double, double> distance_to_branch_points(const SheetPoint& p, const CoveringSpec& spec) {
  return {distance(p.planar(), spec.branch_minus), distance(p.planar(), spec.branch_plus)};
}

// ---------------------------------------------------------------------------

void check_branch_point_avoidance(double h) {
  if (!(h > 0.0) || !std::isfinite(h)) {
    throw Error(ErrorKind::InvalidConfig, "grid spacing must be positive");
  }
  const double q = 1.0 / h - 0.5;
  const double r = std::round(q);
  if (std::abs(q - r) <= 1e-9 * std::max(1.0, std::abs(q))) {
    std::ostringstream os;
    os << "(" << static_cast<long long>(r) << "+1/2)*h = 1 for h = " << h;
    throw Error(ErrorKind::BranchPointOnGrid, os.str());
  }
}

std::int64_t BranchedGrid::index(int sheet, int i, int j) const {
  if (sheet < 0 || sheet >= covering_.num_sheets || i < i_lo_ || i >= i_hi_ || j < j_lo_ || j >= j_hi_) {
    return -1;
  }
  const std::size_t k = (static_cast<std::size_t>(sheet) * ny() + (j - j_lo_)) * nx() + (i - i_lo_);
  return dense_[k];
}

Box BranchedGrid::box() const { return {i_lo_ * h_, i_hi_ * h_, j_lo_ * h_, j_hi_ * h_}; }

bool BranchedGrid::crosses_cut(int i) const {
  const double x = x_of(i);
  return options_.cut_mode == CutMode::Coupled && x > cut_lo_ && x < cut_hi_;
}

void BranchedGrid::wire() {
  const int n = covering_.num_sheets;
  const double r2 = disc_radius_ * disc_radius_;
  auto active = [&](int i, int j) {
    if (disc_radius_ <= 0.0) return true;
    const double x = x_of(i), y = y_of(j);
    return x * x + y * y < r2 * (1.0 - 1e-12);
  };

  dense_.assign(static_cast<std::size_t>(n) * nx() * ny(), -1);
  nodes_.clear();
  for (int s = 0; s < n; ++s) {
    for (int j = j_lo_; j < j_hi_; ++j) {
      for (int i = i_lo_; i < i_hi_; ++i) {
        if (!active(i, j)) continue;
        const std::size_t k = (static_cast<std::size_t>(s) * ny() + (j - j_lo_)) * nx() + (i - i_lo_);
        dense_[k] = static_cast<std::int64_t>(nodes_.size());
        Node nd{};
        nd.sheet = s;
        nd.i = i;
        nd.j = j;
        nd.x = x_of(i);
        nd.y = y_of(j);
        nd.nbr = {-1, -1, -1, -1};
        nd.wall = {1.0, 1.0, 1.0, 1.0};
        nodes_.push_back(nd);
      }
    }
  }

  const bool periodic = options_.boundary == BoundaryKind::Periodic;
  auto wrap_i = [&](int i) { return i_lo_ + ((i - i_lo_) % nx() + nx()) % nx(); };
  auto wrap_j = [&](int j) { return j_lo_ + ((j - j_lo_) % ny() + ny()) % ny(); };
  constexpr double kMinWall = 1e-6;

  for (Node& nd : nodes_) {
    const int s = nd.sheet, i = nd.i, j = nd.j;
    int ie = i + 1, iw = i - 1, jn = j + 1, js = j - 1;
    if (periodic) {
      ie = wrap_i(ie);
      iw = wrap_i(iw);
      jn = wrap_j(jn);
      js = wrap_j(js);
    }
    const int sn = (j == -1 && jn == 0 && crosses_cut(i)) ? covering_.monodromy(s, +1) : s;
    const int ss = (j == 0 && js == -1 && crosses_cut(i)) ? covering_.monodromy(s, -1) : s;
    nd.nbr[East] = index(s, ie, j);
    nd.nbr[West] = index(s, iw, j);
    nd.nbr[North] = index(sn, i, jn);
    nd.nbr[South] = index(ss, i, js);

    if (disc_radius_ > 0.0) {
      const double R = disc_radius_;
      const double hx = std::sqrt(std::max(0.0, R * R - nd.y * nd.y));
      const double hy = std::sqrt(std::max(0.0, R * R - nd.x * nd.x));
      if (nd.nbr[East] < 0) nd.wall[East] = std::clamp((hx - nd.x) / h_, kMinWall, 1.0);
      if (nd.nbr[West] < 0) nd.wall[West] = std::clamp((hx + nd.x) / h_, kMinWall, 1.0);
      if (nd.nbr[North] < 0) nd.wall[North] = std::clamp((hy - nd.y) / h_, kMinWall, 1.0);
      if (nd.nbr[South] < 0) nd.wall[South] = std::clamp((hy + nd.y) / h_, kMinWall, 1.0);
    }
  }
}

void BranchedGrid::write_adjacency_csv(std::ostream& os) const {
  os << "node_id,sheet,x,y,neighbor_ids\n";
  os.precision(17);
  for (std::size_t id = 0; id < nodes_.size(); ++id) {
    const Node& nd = nodes_[id];
    os << id << ',' << nd.sheet << ',' << nd.x << ',' << nd.y << ',' << nd.nbr[East] << ';'
       << nd.nbr[West] << ';' << nd.nbr[North] << ';' << nd.nbr[South] << '\n';
  }
}

namespace {
int floor_index(double v, double h) { return static_cast<int>(std::floor(v / h + 1e-9)); }
int ceil_index(double v, double h) { return static_cast<int>(std::ceil(v / h - 1e-9)); }
}  // namespace

BranchedGrid build_grid(const CoveringSpec& spec, double L, double h, GridOptions opt) {
  spec.validate();
  if (!(L > 4.0)) {
    throw Error(ErrorKind::ExtentTooSmall, "half extent L must exceed 4, got " + std::to_string(L));
  }
  check_branch_point_avoidance(h);
  BranchedGrid g;
  g.covering_ = spec;
  g.options_ = opt;
  g.h_ = h;
  const int N = ceil_index(L, h);
  g.i_lo_ = g.j_lo_ = -N;
  g.i_hi_ = g.j_hi_ = N;
  g.cut_lo_ = spec.branch_minus.x;
  g.cut_hi_ = spec.branch_plus.x;
  g.wire();
  return g;
}

BranchedGrid build_box_grid(const CoveringSpec& spec, const Box& box, double h, GridOptions opt) {
  spec.validate();
  if (!(box.x_min <= -3.0 && box.x_max >= 3.0 && box.y_min <= -2.0 && box.y_max >= 2.0)) {
    throw Error(ErrorKind::ExtentTooSmall, "box must contain the discs of radius 2 around both branch points");
  }
  check_branch_point_avoidance(h);
  BranchedGrid g;
  g.covering_ = spec;
  g.options_ = opt;
  g.h_ = h;
  g.i_lo_ = floor_index(box.x_min, h);
  g.i_hi_ = ceil_index(box.x_max, h);
  g.j_lo_ = floor_index(box.y_min, h);
  g.j_hi_ = ceil_index(box.y_max, h);
  g.cut_lo_ = spec.branch_minus.x;
  g.cut_hi_ = spec.branch_plus.x;
  g.wire();
  return g;
}

BranchedGrid build_branched_disc(double h, double radius, int num_sheets) {
  CoveringSpec spec;
  spec.num_sheets = num_sheets;
  spec.validate();
  if (!(h > 0.0) || !(radius > 2.0 * h)) {
    throw Error(ErrorKind::InvalidConfig, "disc radius must exceed two grid spacings");
  }
  BranchedGrid g;
  g.covering_ = spec;
  g.h_ = h;
  g.disc_radius_ = radius;
  const int N = ceil_index(radius, h);
  g.i_lo_ = g.j_lo_ = -N;
  g.i_hi_ = g.j_hi_ = N;
  g.cut_lo_ = -std::numeric_limits<double>::infinity();
  g.cut_hi_ = 0.0;
  g.wire();
  return g;
}

}  // namespace branchwave
