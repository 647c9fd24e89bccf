// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace trifuse {

// Error taxonomy shared by the library and the CLI exit-code mapping:
// parameter errors are usage problems (exit 2), structural/format/io errors
// are data problems (exit 3), numerical errors are non-finite math (exit 4).

struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Shape or size mismatch between otherwise well-formed objects.
struct structural_error : error {
    using error::error;
};

// Malformed on-disk data (bad magic, truncation, bad version).
struct format_error : error {
    using error::error;
};

// Invalid argument or configuration value.
struct parameter_error : error {
    using error::error;
};

// Non-finite values where finite math was required.
struct numerical_error : error {
    using error::error;
};

// Filesystem/IO failure.
struct io_error : error {
    using error::error;
};

}  // namespace trifuse
