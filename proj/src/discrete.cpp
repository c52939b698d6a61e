#include "mcs/discrete.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mcs/errors.hpp"

namespace mcs {

ScenarioTree::ScenarioTree() {
    nodes_.push_back(Node{});
}

int ScenarioTree::add_child(int parent, double ret, double prob) {
    if (parent < 0 || static_cast<std::size_t>(parent) >= nodes_.size())
        throw ConfigError("tree parent id out of range");
    if (ret <= -1.0) throw ConfigError("tree returns must lie in (-1, inf)");
    if (!(prob > 0.0) || prob > 1.0)
        throw ConfigError("tree branch probability must lie in (0, 1]");
    Node n;
    n.period = nodes_[static_cast<std::size_t>(parent)].period + 1;
    n.ret = ret;
    n.prob = prob;
    n.parent = parent;
    const int id = static_cast<int>(nodes_.size());
    nodes_.push_back(n);
    nodes_[static_cast<std::size_t>(parent)].children.push_back(id);
    periods_ = std::max(periods_, n.period);
    return id;
}

ScenarioTree ScenarioTree::product(
    const std::vector<std::vector<std::pair<double, double>>>& period_branches) {
    ScenarioTree tree;
    std::vector<int> frontier{0};
    for (const auto& branches : period_branches) {
        std::vector<int> next;
        for (int id : frontier)
            for (const auto& [ret, prob] : branches) next.push_back(tree.add_child(id, ret, prob));
        frontier = std::move(next);
    }
    return tree;
}

void ScenarioTree::validate() const {
    if (periods_ < 1) throw ConfigError("tree needs at least one period");
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        const Node& n = nodes_[i];
        if (n.period < periods_) {
            if (n.children.empty())
                throw ConfigError("leaf at period " + std::to_string(n.period) +
                                  " before the terminal period");
            long double psum = 0.0L;
            for (int c : n.children) psum += node(c).prob;
            if (std::abs(static_cast<double>(psum - 1.0L)) > 1e-15)
                throw ConfigError("branch probabilities at node " + std::to_string(i) +
                                  " sum to " + std::to_string(static_cast<double>(psum)));
        } else if (!n.children.empty()) {
            throw ConfigError("node beyond the terminal period");
        }
        if (i > 0 && n.ret <= -1.0) throw ConfigError("return outside (-1, inf)");
    }
}

DiscreteFactorProcess solve_recursion(const ScenarioTree& tree) {
    tree.validate();
    DiscreteFactorProcess out;
    out.a.assign(tree.size(), 0.0L);
    // walk node ids backwards: children always have larger ids
    for (std::size_t i = tree.size(); i-- > 0;) {
        const auto& n = tree.node(static_cast<int>(i));
        if (n.period == tree.periods()) {
            out.a[i] = 1.0L;
        } else if (n.period >= 0 && !n.children.empty()) {
            long double e = 0.0L;
            for (int c : n.children) {
                const auto& ch = tree.node(c);
                e += static_cast<long double>(ch.prob) * (1.0L + static_cast<long double>(ch.ret)) /
                     out.a[static_cast<std::size_t>(c)];
            }
            if (!(e > 0.0L) && !(e < 0.0L))
                throw DegenerateReturnError("conditional expectation vanishes at node " +
                                            std::to_string(i));
            out.a[i] = 1.0L + 1.0L / e;
        }
    }
    return out;
}

namespace {

// E[1 + R_k | node] for a period-k horizon seen from `id`
long double expected_gross_return(const ScenarioTree& tree, int id, int k) {
    const auto& n = tree.node(id);
    if (n.period == k - 1) {
        long double e = 0.0L;
        for (int c : n.children)
            e += static_cast<long double>(tree.node(c).prob) *
                 (1.0L + static_cast<long double>(tree.node(c).ret));
        return e;
    }
    long double e = 0.0L;
    for (int c : n.children)
        e += static_cast<long double>(tree.node(c).prob) * expected_gross_return(tree, c, k);
    return e;
}

} // namespace

DiscreteFactorProcess candidate_factor(const ScenarioTree& tree) {
    tree.validate();
    DiscreteFactorProcess out;
    out.a.assign(tree.size(), 0.0L);
    const int n_periods = tree.periods();
    for (std::size_t i = 0; i < tree.size(); ++i) {
        const auto& n = tree.node(static_cast<int>(i));
        if (static_cast<int>(i) == tree.root()) continue;
        if (n.period == n_periods) {
            out.a[i] = 1.0L;
            continue;
        }
        long double sum = 0.0L, prod = 1.0L;
        for (int j = n.period + 1; j <= n_periods; ++j) {
            const long double e = expected_gross_return(tree, static_cast<int>(i), j);
            if (!(e > 0.0L) && !(e < 0.0L))
                throw DegenerateReturnError("expected gross return vanishes from node " +
                                            std::to_string(i));
            prod /= e;
            sum += prod;
        }
        out.a[i] = 1.0L + sum;
    }
    return out;
}

DiscreteEvaluation evaluate_tree(const ScenarioTree& tree, const DiscreteFactorProcess& factors,
                                 long double x0) {
    if (factors.a.size() != tree.size())
        throw ConfigError("factor process does not match the tree");
    DiscreteEvaluation ev;
    ev.consumption.assign(tree.size(), 0.0L);
    ev.wealth.assign(tree.size(), 0.0L);
    ev.wealth[0] = x0;
    for (std::size_t i = 1; i < tree.size(); ++i) {
        const auto& n = tree.node(static_cast<int>(i));
        const long double grown =
            ev.wealth[static_cast<std::size_t>(n.parent)] * (1.0L + static_cast<long double>(n.ret));
        ev.consumption[i] = grown / factors.a[i];
        ev.wealth[i] = grown - ev.consumption[i];
    }
    return ev;
}

MartingaleViolation martingale_verify(const ScenarioTree& tree,
                                      const DiscreteFactorProcess& factors) {
    tree.validate();
    const auto ev = evaluate_tree(tree, factors, 1.0L);
    MartingaleViolation out;
    for (std::size_t i = 1; i < tree.size(); ++i) {
        const auto& n = tree.node(static_cast<int>(i));
        if (n.period == tree.periods()) {
            out.max_leaf_wealth = std::max(out.max_leaf_wealth, std::abs(ev.wealth[i]));
            continue;
        }
        long double e = 0.0L;
        for (int c : n.children)
            e += static_cast<long double>(tree.node(c).prob) *
                 ev.consumption[static_cast<std::size_t>(c)];
        out.max_violation = std::max(out.max_violation, std::abs(e - ev.consumption[i]));
    }
    return out;
}

} // namespace mcs
