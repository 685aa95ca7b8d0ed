#pragma once

#include <string>
#include <vector>

namespace hct::oracle {

// Reference evaluator, deliberately independent of the engine: it re-parses
// the operation and tensors from their JSON forms and runs plain nested loops.
// Returns the result in tensor file form.
std::string evaluate_json(const std::string& tom_json,
                          const std::vector<std::string>& operand_jsons);

}  // namespace hct::oracle
