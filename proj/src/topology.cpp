#include "wsnfm/topology.hpp"

#include <algorithm>
#include <stdexcept>

namespace wsnfm {

int CellGrid::cell_index_of(const Position& p) const {
    int cx = static_cast<int>(std::floor(p.x / cell_side));
    int cy = static_cast<int>(std::floor(p.y / cell_side));
    cx = std::clamp(cx, 0, nx - 1);
    cy = std::clamp(cy, 0, ny - 1);
    return cell_id_at(cx, cy);
}

CellGrid build_grid(double area_w, double area_h, double cell_side) {
    if (area_w <= 0 || area_h <= 0 || cell_side <= 0)
        throw std::invalid_argument("build_grid: dimensions must be positive");
    CellGrid g;
    g.area_w = area_w;
    g.area_h = area_h;
    g.cell_side = cell_side;
    g.nx = static_cast<int>(std::ceil(area_w / cell_side));
    g.ny = static_cast<int>(std::ceil(area_h / cell_side));
    g.cells.resize(static_cast<size_t>(g.nx) * g.ny);
    for (int i = 0; i < g.cell_count(); i++) g.cells[i].cell_id = i;
    return g;
}

void assign_nodes(CellGrid& grid, std::span<const std::pair<NodeId, Position>> nodes) {
    for (const auto& [id, pos] : nodes) {
        if (pos.x < 0 || pos.x > grid.area_w || pos.y < 0 || pos.y > grid.area_h)
            throw std::invalid_argument("assign_nodes: position outside deployment area");
        grid.cells[grid.cell_index_of(pos)].members.insert(id);
    }
}

std::vector<GroupRecord> form_groups(const CellGrid& grid, int group_dim) {
    if (group_dim < 1)
        throw std::invalid_argument("form_groups: group_dim must be >= 1");
    int gx = (grid.nx + group_dim - 1) / group_dim;
    int gy = (grid.ny + group_dim - 1) / group_dim;
    std::vector<GroupRecord> groups(static_cast<size_t>(gx) * gy);
    for (int cy = 0; cy < grid.ny; cy++) {
        for (int cx = 0; cx < grid.nx; cx++) {
            int gid = (cy / group_dim) * gx + (cx / group_dim);
            groups[gid].group_id = gid;
            groups[gid].cell_ids.insert(grid.cell_id_at(cx, cy));
        }
    }
    return groups;
}

namespace {

// (energy desc, id asc) over candidate ids.
Election pick_top_two(const std::set<NodeId>& candidates, const std::map<NodeId, double>& energies) {
    Election e;
    auto better = [&](NodeId a, NodeId b) {
        double ea = energies.at(a), eb = energies.at(b);
        if (ea != eb) return ea > eb;
        return a < b;
    };
    for (NodeId id : candidates) {
        if (e.winner == kNoNode || better(id, e.winner)) {
            e.runner_up = e.winner;
            e.winner = id;
        } else if (e.runner_up == kNoNode || better(id, e.runner_up)) {
            e.runner_up = id;
        }
    }
    return e;
}

} // namespace

Election elect_cell_manager(const CellRecord& cell, const std::map<NodeId, double>& energies) {
    if (cell.members.empty())
        throw std::invalid_argument("elect_cell_manager: empty cell has no candidate");
    return pick_top_two(cell.members, energies);
}

Election elect_group_manager(const GroupRecord& group, const CellGrid& grid,
                             const std::map<NodeId, double>& energies) {
    std::set<NodeId> managers;
    for (int cid : group.cell_ids) {
        NodeId m = grid.cells[cid].manager;
        if (m != kNoNode) managers.insert(m);
    }
    if (managers.empty())
        throw std::invalid_argument("elect_group_manager: no managed cells in group");
    return pick_top_two(managers, energies);
}

std::vector<int> cell_neighbors4(const CellGrid& grid, int cell_id) {
    auto [cx, cy] = grid.cell_coords(cell_id);
    std::vector<int> out;
    if (cy > 0) out.push_back(grid.cell_id_at(cx, cy - 1));
    if (cx > 0) out.push_back(grid.cell_id_at(cx - 1, cy));
    if (cx < grid.nx - 1) out.push_back(grid.cell_id_at(cx + 1, cy));
    if (cy < grid.ny - 1) out.push_back(grid.cell_id_at(cx, cy + 1));
    std::sort(out.begin(), out.end());
    return out;
}

} // namespace wsnfm
