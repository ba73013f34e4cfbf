#pragma once

// Primal network simplex for the dense balanced transportation problem
//
//     min <P, C>  s.t.  P 1 = a,  P^T 1 = b,  P >= 0.
//
// Spanning-tree bookkeeping (thread / reverse-thread / successor counts, strongly
// feasible pivoting, block-search pricing) follows the classical LEMON design.
// Arcs are uncapacitated, so every non-tree arc sits at flow zero and the flow
// of the basis is stored per node on its predecessor arc.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "wpt/errors.hpp"

namespace wpt::ot {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct PlanEntry {
    Eigen::Index row;
    Eigen::Index col;
    double mass;
};

struct NetworkSimplexResult {
    std::vector<PlanEntry> entries;  ///< basic variables with positive mass, row-major order
    double cost = 0.0;
    std::int64_t pivots = 0;
};

class NetworkSimplex {
public:
    NetworkSimplex(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const RowMatrix& cost)
        : n_(a.size()), m_(b.size()), cost_(cost) {
        if (cost.rows() != n_ || cost.cols() != m_)
            throw InputError("cost matrix is " + std::to_string(cost.rows()) + "x" + std::to_string(cost.cols()) +
                             ", expected " + std::to_string(n_) + "x" + std::to_string(m_));
        node_num_ = static_cast<int>(n_ + m_);
        root_ = node_num_;
        arc_num_ = static_cast<std::int64_t>(n_) * static_cast<std::int64_t>(m_);
        supply_.resize(node_num_ + 1);
        for (Eigen::Index i = 0; i < n_; ++i) supply_[i] = a(i);
        for (Eigen::Index j = 0; j < m_; ++j) supply_[n_ + j] = -b(j);
        double max_cost = 0.0;
        for (std::int64_t e = 0; e < arc_num_; ++e) max_cost = std::max(max_cost, std::abs(cost_.data()[e]));
        art_cost_ = (max_cost + 1.0) * static_cast<double>(node_num_ + 1);
        // reduced costs above -tol_ are treated as nonnegative; see optimality note in solve()
        tol_ = 64.0 * std::numeric_limits<double>::epsilon() * art_cost_;
        // Short blocks (a tenth of the usual sqrt(arcs)) measured fastest on dense Euclidean costs.
        block_size_ = std::max<std::int64_t>(
            10, static_cast<std::int64_t>(0.1 * std::sqrt(static_cast<double>(arc_num_))));
        chunk_ = std::min<Eigen::Index>(m_, block_size_);
    }

    /// Runs to optimality. The returned plan is optimal up to `tol` in objective
    /// (non-tree reduced costs are >= -tol and the plan has unit total mass).
    NetworkSimplexResult solve(std::int64_t max_pivots = std::numeric_limits<std::int64_t>::max(),
                               const std::vector<int>* row_order = nullptr, const std::vector<int>* col_order = nullptr) {
        if (row_order && col_order)
            init_staircase(*row_order, *col_order);
        else
            init();
        NetworkSimplexResult result;
        while (find_entering_arc()) {
            find_join_node();
            find_leaving_arc();
            change_flow();
            update_tree_structure();
            update_potential();
            if (++result.pivots > max_pivots)
                throw SolverError("network simplex exceeded " + std::to_string(max_pivots) + " pivots");
        }
        double total = 0.0;
        for (int u = 0; u < node_num_; ++u) total += std::abs(supply_[u]);
        const double feas_tol = 1e-9 * std::max(1.0, total);
        for (int u = 0; u < node_num_; ++u) {
            if (pred_[u] >= arc_num_ && flow_[u] > feas_tol)
                throw SolverError("transport problem is infeasible (unbalanced marginals)");
        }
        for (int u = 0; u < node_num_; ++u) {
            const std::int64_t e = pred_[u];
            if (e >= arc_num_ || flow_[u] <= 0.0) continue;
            const auto i = static_cast<Eigen::Index>(e / m_);
            const auto j = static_cast<Eigen::Index>(e % m_);
            result.entries.push_back({i, j, flow_[u]});
            result.cost += flow_[u] * cost_.data()[e];
        }
        std::sort(result.entries.begin(), result.entries.end(), [](const PlanEntry& x, const PlanEntry& y) {
            return x.row != y.row ? x.row < y.row : x.col < y.col;
        });
        return result;
    }

    /// Dual potentials (node order: rows then columns); valid after solve().
    [[nodiscard]] std::vector<double> potentials() const { return {pi_.begin(), pi_.begin() + node_num_}; }

    /// Debug check of the spanning-tree invariants; returns an empty string when consistent.
    [[nodiscard]] std::string check_tree() const {
        // every node reachable from root through the thread exactly once
        std::vector<char> seen(node_num_ + 1, 0);
        int u = root_;
        for (int k = 0; k <= node_num_; ++k) {
            if (seen[u]) return "thread revisits node " + std::to_string(u);
            seen[u] = 1;
            if (rev_thread_[thread_[u]] != u) return "rev_thread mismatch at " + std::to_string(u);
            u = thread_[u];
        }
        if (u != root_) return "thread is not a single cycle";
        for (int v = 0; v < node_num_; ++v) {
            const std::int64_t e = pred_[v];
            const int s = arc_source(e), t = arc_target(e);
            if (!((s == v && t == parent_[v] && pred_dir_[v] == 1) || (t == v && s == parent_[v] && pred_dir_[v] == -1)))
                return "pred arc inconsistent at " + std::to_string(v);
            const double rc = arc_cost(e) + pi_[s] - pi_[t];
            if (std::abs(rc) > 1e3 * tol_) return "tree arc with nonzero reduced cost at " + std::to_string(v);
            if (flow_[v] < -1e-12) return "negative flow at " + std::to_string(v);
        }
        return {};
    }

private:
    static constexpr double kInf = std::numeric_limits<double>::infinity();

    [[nodiscard]] int arc_source(std::int64_t e) const {
        return e < arc_num_ ? static_cast<int>(e / m_) : art_source_[e - arc_num_];
    }
    [[nodiscard]] int arc_target(std::int64_t e) const {
        return e < arc_num_ ? static_cast<int>(n_ + e % m_) : art_target_[e - arc_num_];
    }
    [[nodiscard]] double arc_cost(std::int64_t e) const {
        return e < arc_num_ ? cost_.data()[e] : art_arc_cost_[e - arc_num_];
    }

    void init() {
        const int all = node_num_ + 1;
        parent_.assign(all, -1);
        pred_.assign(all, -1);
        pred_dir_.assign(all, 0);
        thread_.assign(all, 0);
        rev_thread_.assign(all, 0);
        succ_num_.assign(all, 0);
        last_succ_.assign(all, 0);
        pi_.assign(all, 0.0);
        flow_.assign(all, 0.0);
        art_source_.assign(node_num_, 0);
        art_target_.assign(node_num_, 0);
        art_arc_cost_.assign(node_num_, 0.0);
        next_row_ = 0;
        next_col_ = 0;

        parent_[root_] = -1;
        pred_[root_] = -1;
        thread_[root_] = 0;
        rev_thread_[0] = root_;
        succ_num_[root_] = node_num_ + 1;
        last_succ_[root_] = root_ - 1;
        pi_[root_] = 0.0;
        for (int u = 0; u < node_num_; ++u) {
            const std::int64_t e = arc_num_ + u;
            parent_[u] = root_;
            pred_[u] = e;
            thread_[u] = u + 1;
            rev_thread_[u + 1] = u;
            succ_num_[u] = 1;
            last_succ_[u] = u;
            if (supply_[u] >= 0.0) {
                pred_dir_[u] = 1;
                pi_[u] = 0.0;
                art_source_[u] = u;
                art_target_[u] = root_;
                flow_[u] = supply_[u];
                art_arc_cost_[u] = 0.0;
            } else {
                pred_dir_[u] = -1;
                pi_[u] = art_cost_;
                art_source_[u] = root_;
                art_target_[u] = u;
                flow_[u] = -supply_[u];
                art_arc_cost_[u] = art_cost_;
            }
        }
    }

    // Warm start: the north-west-corner plan over the given row/column orders is a
    // spanning tree on the real nodes (a staircase). The root hangs off the first
    // row through a zero-flow artificial arc.
    void init_staircase(const std::vector<int>& row_order, const std::vector<int>& col_order) {
        init();
        std::size_t r = 0, c = 0;
        double rem_r = supply_[row_order[0]];
        double rem_c = -supply_[n_ + col_order[0]];
        std::vector<std::tuple<int, int, double>> tree_arcs;  // (row, col, flow)
        while (true) {
            const double f = std::min(rem_r, rem_c);
            tree_arcs.emplace_back(row_order[r], col_order[c], std::max(f, 0.0));
            rem_r -= f;
            rem_c -= f;
            const bool last_r = r + 1 == row_order.size();
            const bool last_c = c + 1 == col_order.size();
            if (last_r && last_c) break;
            if ((rem_r <= rem_c && !last_r) || last_c) {
                ++r;
                rem_r = supply_[row_order[r]];
            } else {
                ++c;
                rem_c = -supply_[n_ + col_order[c]];
            }
        }
        std::vector<std::vector<std::pair<int, std::size_t>>> nbr(node_num_);
        for (std::size_t k = 0; k < tree_arcs.size(); ++k) {
            const auto& [i, j, f] = tree_arcs[k];
            nbr[i].emplace_back(static_cast<int>(n_ + j), k);
            nbr[n_ + j].emplace_back(i, k);
        }
        const int top = row_order[0];
        parent_[top] = root_;
        pred_[top] = arc_num_ + top;
        art_source_[top] = top;
        art_target_[top] = root_;
        art_arc_cost_[top] = 0.0;
        pred_dir_[top] = 1;
        flow_[top] = 0.0;
        pi_[top] = 0.0;
        // iterative DFS for parent / pred / potentials / preorder thread
        std::vector<int> order;
        order.reserve(node_num_ + 1);
        order.push_back(root_);
        std::vector<int> stack{top};
        std::vector<char> visited(node_num_ + 1, 0);
        visited[root_] = 1;
        visited[top] = 1;
        while (!stack.empty()) {
            const int u = stack.back();
            stack.pop_back();
            order.push_back(u);
            for (const auto& [v, k] : nbr[u]) {
                if (visited[v]) continue;
                visited[v] = 1;
                const auto& [i, j, f] = tree_arcs[k];
                const std::int64_t e = static_cast<std::int64_t>(i) * m_ + j;
                parent_[v] = u;
                pred_[v] = e;
                flow_[v] = f;
                if (v == i) {  // arc v -> u
                    pred_dir_[v] = 1;
                    pi_[v] = pi_[u] - cost_.data()[e];
                } else {  // arc u -> v
                    pred_dir_[v] = -1;
                    pi_[v] = pi_[u] + cost_.data()[e];
                }
                stack.push_back(v);
            }
        }
        // Stack DFS emits every node before its descendants with contiguous subtrees,
        // which is all the thread structure needs.
        const int count = static_cast<int>(order.size());
        for (int k = 0; k < count; ++k) {
            const int u = order[k];
            const int nxt = order[(k + 1) % count];
            thread_[u] = nxt;
            rev_thread_[nxt] = u;
        }
        for (int u = 0; u <= node_num_; ++u) {
            succ_num_[u] = 1;
            last_succ_[u] = u;
        }
        for (int k = count - 1; k > 0; --k) {
            const int u = order[k];
            const int p = parent_[u];
            succ_num_[p] += succ_num_[u];
        }
        std::vector<int> pos(node_num_ + 1);
        for (int k = 0; k < count; ++k) pos[order[k]] = k;
        for (int k = 0; k < count; ++k) {
            const int u = order[k];
            last_succ_[u] = order[pos[u] + succ_num_[u] - 1];
        }
    }

    // Block search pricing over the real arcs in row-major order. Each chunk is a
    // contiguous piece of one cost row, reduced with a vectorized minimum of
    // c_ij - pi_j; the search stops after block_size_ arcs once a candidate exists.
    bool find_entering_arc() {
        double best = -tol_;
        std::int64_t seen = 0;
        Eigen::Index row = next_row_;
        Eigen::Index col = next_col_;
        const std::int64_t total = arc_num_;
        while (seen < total) {
            const Eigen::Index len = std::min<Eigen::Index>(m_ - col, chunk_);
            const Eigen::Map<const Eigen::ArrayXd> c_part(cost_.data() + row * m_ + col, len);
            const Eigen::Map<const Eigen::ArrayXd> pi_part(pi_.data() + n_ + col, len);
            const double part_min = (c_part - pi_part).minCoeff() + pi_[row];
            if (part_min < best) {
                Eigen::Index j = 0;
                (c_part - pi_part).minCoeff(&j);
                best = part_min;
                in_arc_ = static_cast<std::int64_t>(row) * m_ + col + j;
            }
            seen += len;
            col += len;
            if (col == m_) {
                col = 0;
                if (++row == n_) row = 0;
            }
            if (seen >= block_size_ && best < -tol_) break;
        }
        next_row_ = row;
        next_col_ = col;
        return best < -tol_;
    }

    void find_join_node() {
        int u = arc_source(in_arc_);
        int v = arc_target(in_arc_);
        while (u != v) {
            if (succ_num_[u] < succ_num_[v])
                u = parent_[u];
            else
                v = parent_[v];
        }
        join_ = u;
    }

    // The entering arc is always at its lower bound, so the cycle is oriented
    // from its source towards its target.
    void find_leaving_arc() {
        const int first = arc_source(in_arc_);
        const int second = arc_target(in_arc_);
        delta_ = kInf;
        int result = 0;
        for (int u = first; u != join_; u = parent_[u]) {
            const double d = pred_dir_[u] == 1 ? std::max(flow_[u], 0.0) : kInf;
            if (d < delta_) {
                delta_ = d;
                u_out_ = u;
                result = 1;
            }
        }
        for (int u = second; u != join_; u = parent_[u]) {
            const double d = pred_dir_[u] == -1 ? std::max(flow_[u], 0.0) : kInf;
            if (d <= delta_) {
                delta_ = d;
                u_out_ = u;
                result = 2;
            }
        }
        if (result == 0) throw SolverError("network simplex: unbounded cycle (inconsistent costs)");
        if (result == 1) {
            u_in_ = first;
            v_in_ = second;
        } else {
            u_in_ = second;
            v_in_ = first;
        }
    }

    void change_flow() {
        if (delta_ > 0.0) {
            for (int u = arc_source(in_arc_); u != join_; u = parent_[u]) flow_[u] -= pred_dir_[u] * delta_;
            for (int u = arc_target(in_arc_); u != join_; u = parent_[u]) flow_[u] += pred_dir_[u] * delta_;
        }
        flow_[u_out_] = 0.0;
    }

    void update_tree_structure() {
        const int old_rev_thread = rev_thread_[u_out_];
        const int old_succ_num = succ_num_[u_out_];
        const int old_last_succ = last_succ_[u_out_];
        v_out_ = parent_[u_out_];
        const signed char in_dir = u_in_ == arc_source(in_arc_) ? 1 : -1;

        if (u_in_ == u_out_) {
            parent_[u_in_] = v_in_;
            pred_[u_in_] = in_arc_;
            pred_dir_[u_in_] = in_dir;
            flow_[u_in_] = delta_;

            if (thread_[v_in_] != u_out_) {
                int after = thread_[old_last_succ];
                thread_[old_rev_thread] = after;
                rev_thread_[after] = old_rev_thread;
                after = thread_[v_in_];
                thread_[v_in_] = u_out_;
                rev_thread_[u_out_] = v_in_;
                thread_[old_last_succ] = after;
                rev_thread_[after] = old_last_succ;
            }
        } else {
            // when old_rev_thread == v_in, join and v_out coincide
            const int thread_continue = old_rev_thread == v_in_ ? thread_[old_last_succ] : thread_[v_in_];

            // re-hang the stem u_in -> ... -> u_out under v_in, reversing parents
            int stem = u_in_;
            int par_stem = v_in_;
            int next_stem;
            int last = last_succ_[u_in_];
            int before;
            int after = thread_[last];
            thread_[v_in_] = u_in_;
            dirty_revs_.clear();
            dirty_revs_.push_back(v_in_);
            while (stem != u_out_) {
                next_stem = parent_[stem];
                thread_[last] = next_stem;
                dirty_revs_.push_back(last);

                before = rev_thread_[stem];
                thread_[before] = after;
                rev_thread_[after] = before;

                parent_[stem] = par_stem;
                par_stem = stem;
                stem = next_stem;

                last = last_succ_[stem] == last_succ_[par_stem] ? rev_thread_[par_stem] : last_succ_[stem];
                after = thread_[last];
            }
            parent_[u_out_] = par_stem;
            thread_[last] = thread_continue;
            rev_thread_[thread_continue] = last;
            last_succ_[u_out_] = last;

            if (old_rev_thread != v_in_) {
                thread_[old_rev_thread] = after;
                rev_thread_[after] = old_rev_thread;
            }

            for (const int u : dirty_revs_) rev_thread_[thread_[u]] = u;

            int tmp_sc = 0;
            const int tmp_ls = last_succ_[u_out_];
            for (int u = u_out_, p = parent_[u]; u != u_in_; u = p, p = parent_[u]) {
                pred_[u] = pred_[p];
                pred_dir_[u] = static_cast<signed char>(-pred_dir_[p]);
                flow_[u] = flow_[p];
                tmp_sc += succ_num_[u] - succ_num_[p];
                succ_num_[u] = tmp_sc;
                last_succ_[p] = tmp_ls;
            }
            pred_[u_in_] = in_arc_;
            pred_dir_[u_in_] = in_dir;
            flow_[u_in_] = delta_;
            succ_num_[u_in_] = old_succ_num;
        }

        const int up_limit_out = last_succ_[join_] == v_in_ ? join_ : -1;
        const int last_succ_out = last_succ_[u_out_];
        for (int u = v_in_; u != -1 && last_succ_[u] == v_in_; u = parent_[u]) last_succ_[u] = last_succ_out;

        if (join_ != old_rev_thread && v_in_ != old_rev_thread) {
            for (int u = v_out_; u != up_limit_out && last_succ_[u] == old_last_succ; u = parent_[u])
                last_succ_[u] = old_rev_thread;
        } else if (last_succ_out != old_last_succ) {
            for (int u = v_out_; u != up_limit_out && last_succ_[u] == old_last_succ; u = parent_[u])
                last_succ_[u] = last_succ_out;
        }

        for (int u = v_in_; u != join_; u = parent_[u]) succ_num_[u] += old_succ_num;
        for (int u = v_out_; u != join_; u = parent_[u]) succ_num_[u] -= old_succ_num;
    }

    void update_potential() {
        const double sigma = pi_[v_in_] - pi_[u_in_] - pred_dir_[u_in_] * arc_cost(in_arc_);
        const int end = thread_[last_succ_[u_in_]];
        for (int u = u_in_; u != end; u = thread_[u]) pi_[u] += sigma;
    }

    Eigen::Index n_;
    Eigen::Index m_;
    const RowMatrix& cost_;
    int node_num_ = 0;
    int root_ = 0;
    std::int64_t arc_num_ = 0;
    double art_cost_ = 0.0;
    double tol_ = 0.0;
    std::int64_t block_size_ = 10;
    Eigen::Index next_row_ = 0;
    Eigen::Index next_col_ = 0;
    Eigen::Index chunk_ = 1;

    std::vector<double> supply_;
    std::vector<int> parent_;
    std::vector<std::int64_t> pred_;
    std::vector<signed char> pred_dir_;
    std::vector<int> thread_;
    std::vector<int> rev_thread_;
    std::vector<int> succ_num_;
    std::vector<int> last_succ_;
    std::vector<double> pi_;
    std::vector<double> flow_;
    std::vector<int> art_source_;
    std::vector<int> art_target_;
    std::vector<double> art_arc_cost_;
    std::vector<int> dirty_revs_;

    std::int64_t in_arc_ = 0;
    int join_ = 0;
    int u_in_ = 0;
    int v_in_ = 0;
    int u_out_ = 0;
    int v_out_ = 0;
    double delta_ = 0.0;
};

}  // namespace wpt::ot
