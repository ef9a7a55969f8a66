#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <utility>
#include <vector>

#include "wsnfm/energy.hpp"

namespace wsnfm {

using NodeId = int;
constexpr NodeId kNoNode = -1;

struct Position {
    double x = 0;
    double y = 0;
};

inline double distance(const Position& a, const Position& b) {
    return std::hypot(a.x - b.x, a.y - b.y);
}

struct CellRecord {
    int cell_id = -1;
    std::set<NodeId> members;
    NodeId manager = kNoNode;
    NodeId secondary = kNoNode;
    HealthStatus health = HealthStatus::High;
    bool retired = false; // merged away
};

struct CellGrid {
    double area_w = 0, area_h = 0, cell_side = 0;
    int nx = 0, ny = 0;
    std::vector<CellRecord> cells; // index == cell_id, row-major

    int cell_count() const { return nx * ny; }
    int cell_id_at(int cx, int cy) const { return cy * nx + cx; }
    std::pair<int, int> cell_coords(int cell_id) const { return {cell_id % nx, cell_id / nx}; }

    // Points on the max boundary clamp into the last row/column.
    int cell_index_of(const Position& p) const;
};

struct GroupRecord {
    int group_id = -1;
    std::set<int> cell_ids;
    NodeId group_manager = kNoNode;
    NodeId backup = kNoNode;
};

struct Election {
    NodeId winner = kNoNode;
    NodeId runner_up = kNoNode;
};

CellGrid build_grid(double area_w, double area_h, double cell_side);

void assign_nodes(CellGrid& grid, std::span<const std::pair<NodeId, Position>> nodes);

// group_dim x group_dim blocks of cells; last row/column blocks may be smaller.
std::vector<GroupRecord> form_groups(const CellGrid& grid, int group_dim);

// Max residual energy wins, ties broken by smallest id. Runner-up becomes
// the secondary (kNoNode if the cell has a single member).
Election elect_cell_manager(const CellRecord& cell, const std::map<NodeId, double>& energies);

// Same ordering over the member cells' managers.
Election elect_group_manager(const GroupRecord& group, const CellGrid& grid,
                             const std::map<NodeId, double>& energies);

// 4-neighborhood cell ids (grid adjacency), in id order.
std::vector<int> cell_neighbors4(const CellGrid& grid, int cell_id);

} // namespace wsnfm
