#include "qtraj/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

namespace qtraj {

namespace {

struct Cell {
  int row;
  int col;
  double flow;
  bool active;
};

}  // namespace

double min_cost_transport(const RMatrix& cost, std::vector<double> supply,
                          std::vector<double> demand) {
  const int n = static_cast<int>(supply.size());
  const int m = static_cast<int>(demand.size());
  if (cost.rows() != n || cost.cols() != m)
    throw DimensionMismatch("min_cost_transport: cost shape mismatch");
  if (n == 0 || m == 0) return 0.0;

  double sa = 0.0, sb = 0.0;
  for (double x : supply) {
    if (x < 0.0) throw Error("min_cost_transport: negative supply");
    sa += x;
  }
  for (double x : demand) {
    if (x < 0.0) throw Error("min_cost_transport: negative demand");
    sb += x;
  }
  if (!(sa > 0.0) || !(sb > 0.0)) return 0.0;
  for (double& x : demand) x *= sa / sb;  // balance exactly

  const double cost_scale = std::max(1.0, cost.cwiseAbs().maxCoeff());
  const double eps_opt = 1e-12 * cost_scale;

  std::vector<Cell> cells;
  cells.reserve(2 * (n + m));
  std::vector<char> in_basis(static_cast<std::size_t>(n) * m, 0);
  std::vector<std::vector<int>> adj(n + m);  // node -> basic cell ids

  auto add_cell = [&](int i, int j, double flow) {
    int id = static_cast<int>(cells.size());
    cells.push_back({i, j, flow, true});
    in_basis[static_cast<std::size_t>(i) * m + j] = 1;
    adj[i].push_back(id);
    adj[n + j].push_back(id);
    return id;
  };
  auto drop_cell = [&](int id) {
    Cell& c = cells[id];
    c.active = false;
    in_basis[static_cast<std::size_t>(c.row) * m + c.col] = 0;
    auto& ra = adj[c.row];
    ra.erase(std::find(ra.begin(), ra.end(), id));
    auto& ca = adj[n + c.col];
    ca.erase(std::find(ca.begin(), ca.end(), id));
  };

  // North-west corner start: exactly n + m - 1 basic cells.
  {
    std::vector<double> a = supply, b = demand;
    int i = 0, j = 0;
    while (true) {
      double t = std::min(a[i], b[j]);
      add_cell(i, j, t);
      a[i] -= t;
      b[j] -= t;
      if (i == n - 1 && j == m - 1) break;
      if (i == n - 1) ++j;
      else if (j == m - 1) ++i;
      else if (a[i] <= b[j]) ++i;
      else ++j;
    }
  }

  std::vector<double> u(n), v(m);
  std::vector<char> seen(n + m);
  std::vector<int> pred_cell(n + m), pred_node(n + m);

  auto compute_potentials = [&]() {
    std::fill(seen.begin(), seen.end(), 0);
    std::queue<int> q;
    u[0] = 0.0;
    seen[0] = 1;
    q.push(0);
    while (!q.empty()) {
      int node = q.front();
      q.pop();
      for (int id : adj[node]) {
        const Cell& c = cells[id];
        int other = node < n ? n + c.col : c.row;
        if (seen[other]) continue;
        if (other >= n)
          v[other - n] = cost(c.row, c.col) - u[c.row];
        else
          u[other] = cost(c.row, c.col) - v[node - n];
        seen[other] = 1;
        q.push(other);
      }
    }
  };

  // Block pricing: scan from a moving offset, return the most negative
  // reduced-cost cell inside the first block containing any candidate.
  const std::size_t total = static_cast<std::size_t>(n) * m;
  const std::size_t block = std::max<std::size_t>(1024, total / 64);
  std::size_t scan_pos = 0;
  auto find_entering = [&](int& ei, int& ej) {
    std::size_t scanned = 0;
    while (scanned < total) {
      double best = -eps_opt;
      bool found = false;
      std::size_t limit = std::min(block, total - scanned);
      for (std::size_t s = 0; s < limit; ++s) {
        std::size_t f = scan_pos;
        scan_pos = scan_pos + 1 == total ? 0 : scan_pos + 1;
        if (in_basis[f]) continue;
        int i = static_cast<int>(f / m), j = static_cast<int>(f % m);
        double red = cost(i, j) - u[i] - v[j];
        if (red < best) {
          best = red;
          ei = i;
          ej = j;
          found = true;
        }
      }
      scanned += limit;
      if (found) return true;
    }
    return false;
  };

  const long max_iters = 300L * (n + m) + 20000;
  for (long iter = 0; iter < max_iters; ++iter) {
    compute_potentials();
    int ei = -1, ej = -1;
    if (!find_entering(ei, ej)) {
      double obj = 0.0;
      for (const Cell& c : cells)
        if (c.active) obj += c.flow * cost(c.row, c.col);
      return obj;
    }

    // Path from row ei to col ej through the basis tree.
    std::fill(seen.begin(), seen.end(), 0);
    std::queue<int> q;
    seen[ei] = 1;
    q.push(ei);
    int target = n + ej;
    while (!q.empty() && !seen[target]) {
      int node = q.front();
      q.pop();
      for (int id : adj[node]) {
        const Cell& c = cells[id];
        int other = node < n ? n + c.col : c.row;
        if (seen[other]) continue;
        seen[other] = 1;
        pred_cell[other] = id;
        pred_node[other] = node;
        q.push(other);
      }
    }
    if (!seen[target]) throw Error("min_cost_transport: basis disconnected");

    std::vector<int> path;  // cells from col ej back to row ei
    for (int node = target; node != ei; node = pred_node[node])
      path.push_back(pred_cell[node]);

    // Entering cell takes +theta; walking the path from col ej toward row
    // ei the signs alternate starting with minus.
    double theta = std::numeric_limits<double>::infinity();
    int leaving = -1;
    for (std::size_t k = 0; k < path.size(); k += 2) {
      if (cells[path[k]].flow < theta) {
        theta = cells[path[k]].flow;
        leaving = path[k];
      }
    }
    for (std::size_t k = 0; k < path.size(); ++k)
      cells[path[k]].flow += (k % 2 == 0) ? -theta : theta;
    drop_cell(leaving);
    add_cell(ei, ej, theta);
  }
  throw Error("min_cost_transport: iteration limit reached (degenerate cycling)");
}

}  // namespace qtraj
