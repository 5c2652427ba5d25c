#pragma once

#include <string>

#include "funscreen/metamodel.hpp"

namespace funscreen {

// Persists a fitted metamodel as a versioned flat-file bundle: model.txt
// holds every scalar, vector, enum and matrix shape as `key = value` lines,
// and each nonempty matrix sits beside it as a headerless CSV. Numbers are
// written in shortest round-trip form, so save -> load -> predict is
// bit-identical to the original model. The directory is created when
// missing; model.txt is written last.
void save_metamodel(const FunctionalMetamodel& model, const std::string& directory);

// Strict inverse of save_metamodel: missing keys or files, shape mismatches,
// unknown enum names and unsupported versions are format errors.
FunctionalMetamodel load_metamodel(const std::string& directory);

}  // namespace funscreen
