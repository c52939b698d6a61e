#pragma once

#include <cstddef>
#include <vector>

namespace mcs {

// Finite non-recombining scenario tree for the discrete-time consumption
// problem. Node identity plays the role of the period-i information set; the
// root sits at period 0 and carries no return. Conditional expectations are
// evaluated exactly in extended precision.
class ScenarioTree {
public:
    struct Node {
        int period = 0;
        double ret = 0.0;  // return realized on the edge into this node, > -1
        double prob = 1.0; // conditional branch probability, in (0, 1]
        int parent = -1;
        std::vector<int> children;
    };

    // single-node root at period 0
    ScenarioTree();

    // adds a child under `parent`; returns the new node id
    int add_child(int parent, double ret, double prob);

    // i.i.d. product tree: per-period branch lists of (return, probability)
    static ScenarioTree product(
        const std::vector<std::vector<std::pair<double, double>>>& period_branches);

    int periods() const { return periods_; }
    std::size_t size() const { return nodes_.size(); }
    const Node& node(int id) const { return nodes_[static_cast<std::size_t>(id)]; }
    int root() const { return 0; }

    // every non-leaf has children with probabilities summing to 1 (1e-15),
    // all returns > -1, all leaves at the same terminal period
    void validate() const;

private:
    std::vector<Node> nodes_;
    int periods_ = 0;
};

// Wealth-to-consumption divisors a per node (periods 1..n); a_n = 1 at every
// terminal node so the last consumption takes all remaining wealth.
struct DiscreteFactorProcess {
    std::vector<long double> a; // indexed by node id; unused at the root
};

// Exact backward induction of the martingale condition
//   a_i = 1 + 1 / E[(1 + R_{i+1}) / a_{i+1} | node]
DiscreteFactorProcess solve_recursion(const ScenarioTree& tree);

// Candidate divisors from expected compounded returns:
//   a_i = 1 + sum_{j>i} prod_{k=i+1..j} 1 / E[1 + R_k | node]
// Coincides with solve_recursion under mutually independent returns, not in
// general.
DiscreteFactorProcess candidate_factor(const ScenarioTree& tree);

struct MartingaleViolation {
    long double max_violation = 0.0L;   // max |E[C_{i+1}|node] - C_i| over internal nodes
    long double max_leaf_wealth = 0.0L; // max |X_n| over leaf paths (exhaustion)
};

// Evaluates C and X along the tree with X_0 = 1 and
// C_i = X_{i-1} (1 + R_i)/a_i, X_i = X_{i-1} (1 + R_i) - C_i.
MartingaleViolation martingale_verify(const ScenarioTree& tree,
                                      const DiscreteFactorProcess& factors);

// per-node consumption and wealth for reporting
struct DiscreteEvaluation {
    std::vector<long double> consumption; // by node id, 0 at root
    std::vector<long double> wealth;      // by node id, X_0 at root
};
DiscreteEvaluation evaluate_tree(const ScenarioTree& tree, const DiscreteFactorProcess& factors,
                                 long double x0);

} // namespace mcs
