#include "treeflow/errors.hpp"

namespace treeflow {

const char* errc_name(Errc c) {
  switch (c) {
    case Errc::non_stochastic: return "NonStochastic";
    case Errc::negative_entry: return "NegativeEntry";
    case Errc::out_of_range: return "OutOfRange";
    case Errc::alphabet_too_large: return "AlphabetTooLarge";
    case Errc::not_lumpable: return "NotLumpable";
    case Errc::solver_failure: return "SolverFailure";
    case Errc::off_block_mismatch: return "OffBlockMismatch";
    case Errc::size_cap: return "SizeCap";
    case Errc::cycle: return "Cycle";
    case Errc::multiple_roots: return "MultipleRoots";
    case Errc::disconnected: return "Disconnected";
    case Errc::unknown_vertex: return "UnknownVertex";
    case Errc::incomplete_level: return "IncompleteLevel";
    case Errc::support_cap: return "SupportCap";
    case Errc::incomplete_antichain: return "IncompleteAntichain";
    case Errc::degenerate_prior: return "DegeneratePrior";
    case Errc::no_distinct_rows: return "NoDistinctRows";
    case Errc::eps_too_large: return "EpsTooLarge";
    case Errc::unreachable: return "Unreachable";
    case Errc::zero_lambda: return "ZeroLambda";
    case Errc::modulus_mismatch: return "ModulusMismatch";
    case Errc::duplicate_point: return "DuplicatePoint";
    case Errc::too_large: return "TooLarge";
    case Errc::bad_config: return "BadConfig";
  }
  return "Error";
}

}  // namespace treeflow
