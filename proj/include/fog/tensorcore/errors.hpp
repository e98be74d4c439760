#pragma once

#include <stdexcept>
#include <string>

namespace fog {

/// Extents of two operands do not agree.
class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// An operand has the wrong number of dimensions.
class RankError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// An index (segment id, node id, label) is outside its valid range.
class IndexError : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

/// Batch normalization in train mode was handed a single row.
class DegenerateBatchError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A softmax was requested over a segment with no members.
class EmptyNeighborhoodError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// NaN or infinity showed up where only finite values are allowed.
class NonFiniteError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Misuse of the differentiation tape (non-scalar loss, foreign handle, ...).
class TapeError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

}  // namespace fog
