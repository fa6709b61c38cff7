#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <utility>
#include <vector>

namespace branchwave {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

inline double distance(Vec2 a, Vec2 b) {
  const double dx = a.x - b.x, dy = a.y - b.y;
  return std::sqrt(dx * dx + dy * dy);
}

// n-sheeted covering of the plane branched over q- = (-1,0) and q+ = (1,0),
// glued crosswise along the segment [-1,1] x {0}.
struct CoveringSpec {
  int num_sheets = 2;
  Vec2 branch_minus{-1.0, 0.0};
  Vec2 branch_plus{1.0, 0.0};

  void validate() const;
  // Sheet reached from `sheet` after `upward_crossings` signed cut crossings.
  int monodromy(int sheet, int upward_crossings = 1) const;
  bool on_open_cut(Vec2 p) const;
  bool is_branch_point(Vec2 p) const;
};

struct SheetPoint {
  double x = 0.0;
  double y = 0.0;
  int sheet = 0;

  Vec2 planar() const { return {x, y}; }
};

// Nudge applied to points on the open cut and to segments through branch points.
inline constexpr double kCutNudge = 1e-9;

void validate_point(const SheetPoint& p, const CoveringSpec& spec);

// Points on the open cut take the sheet of the limit from below.
SheetPoint canonicalize(const SheetPoint& p, const CoveringSpec& spec);

// Number of transversal crossings of the open cut by the straight segment p1 -> p2.
int crossing_parity(Vec2 p1, Vec2 p2, const CoveringSpec& spec = {});

// Signed variant: +1 for an upward crossing, -1 downward, 0 otherwise.
int signed_crossing(Vec2 p1, Vec2 p2, const CoveringSpec& spec = {});

enum class Route { Direct, ViaMinus, ViaPlus, ViaBoth };
const char* route_name(Route r);

struct DistanceResult {
  double value = 0.0;
  Route route = Route::Direct;
  // Set when a two-branch-point path ties with the optimum (n >= 3 only).
  bool two_branch_tie = false;
};

DistanceResult geodesic_distance_detail(const SheetPoint& p1, const SheetPoint& p2,
                                        const CoveringSpec& spec);
double geodesic_distance(const SheetPoint& p1, const SheetPoint& p2, const CoveringSpec& spec);

// Planar distances (|p - q-|, |p - q+|); independent of the sheet.
std::pair<double, double> distance_to_branch_points(const SheetPoint& p,
                                                    const CoveringSpec& spec = {});

// ---------------------------------------------------------------------------
// Discretization

enum class CutMode { Coupled, Decoupled };
enum class BoundaryKind { Dirichlet, Periodic };

enum Direction : int { East = 0, West = 1, North = 2, South = 3 };

struct Box {
  double x_min = -8.0, x_max = 8.0;
  double y_min = -8.0, y_max = 8.0;
};

struct GridOptions {
  CutMode cut_mode = CutMode::Coupled;
  BoundaryKind boundary = BoundaryKind::Dirichlet;
};

// Staggered grid on the covering: node (s, i, j) sits at ((i+1/2)h, (j+1/2)h)
// on sheet s. Vertical edges between j = -1 and j = 0 with node x inside the
// cut interval connect sheet k (below) to monodromy(k) (above).
class BranchedGrid {
 public:
  struct Node {
    int sheet;
    int i;
    int j;
    double x;
    double y;
    std::array<std::int64_t, 4> nbr;  // -1 = Dirichlet
    std::array<double, 4> wall;       // distance fraction to a Dirichlet wall, 1 on box walls
  };

  const CoveringSpec& covering() const { return covering_; }
  double h() const { return h_; }
  int num_sheets() const { return covering_.num_sheets; }
  int i_lo() const { return i_lo_; }
  int i_hi() const { return i_hi_; }
  int j_lo() const { return j_lo_; }
  int j_hi() const { return j_hi_; }
  int nx() const { return i_hi_ - i_lo_; }
  int ny() const { return j_hi_ - j_lo_; }
  std::size_t size() const { return nodes_.size(); }
  const Node& node(std::size_t id) const { return nodes_[id]; }
  const std::vector<Node>& nodes() const { return nodes_; }
  std::int64_t index(int sheet, int i, int j) const;
  double x_of(int i) const { return (i + 0.5) * h_; }
  double y_of(int j) const { return (j + 0.5) * h_; }
  double cut_lo() const { return cut_lo_; }
  double cut_hi() const { return cut_hi_; }
  CutMode cut_mode() const { return options_.cut_mode; }
  BoundaryKind boundary() const { return options_.boundary; }
  bool is_disc() const { return disc_radius_ > 0.0; }
  double disc_radius() const { return disc_radius_; }
  Box box() const;

  // Whether the vertical edge from row j=-1 to j=0 at column i crosses the cut.
  bool crosses_cut(int i) const;

  void write_adjacency_csv(std::ostream& os) const;

  friend BranchedGrid build_grid(const CoveringSpec&, double, double, GridOptions);
  friend BranchedGrid build_box_grid(const CoveringSpec&, const Box&, double, GridOptions);
  friend BranchedGrid build_branched_disc(double, double, int);

 private:
  void wire();

  CoveringSpec covering_;
  GridOptions options_;
  double h_ = 0.0;
  int i_lo_ = 0, i_hi_ = 0, j_lo_ = 0, j_hi_ = 0;
  double cut_lo_ = -1.0, cut_hi_ = 1.0;
  double disc_radius_ = 0.0;
  std::vector<Node> nodes_;
  std::vector<std::int64_t> dense_;
};

// Square grid [-L, L]^2 per sheet, node count num_sheets * (2 ceil(L/h))^2.
BranchedGrid build_grid(const CoveringSpec& spec, double L, double h, GridOptions opt = {});

// Rectangular variant; the box must contain the discs of radius 2 around q+-.
BranchedGrid build_box_grid(const CoveringSpec& spec, const Box& box, double h,
                            GridOptions opt = {});

// Branched disc of the given radius with a single branch point at the origin
// and the cut along {x <= 0, y = 0}; Dirichlet on the circle through
// symmetric ghost-point weights.
BranchedGrid build_branched_disc(double h, double radius = 1.0, int num_sheets = 2);

// Throws BranchPointOnGrid if some (i + 1/2) h equals +-1.
void check_branch_point_avoidance(double h);

}  // namespace branchwave
