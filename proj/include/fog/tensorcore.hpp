#pragma once

#include "fog/tensorcore/batchnorm.hpp"
#include "fog/tensorcore/errors.hpp"
#include "fog/tensorcore/gradcheck.hpp"
#include "fog/tensorcore/ops.hpp"
#include "fog/tensorcore/random.hpp"
#include "fog/tensorcore/tape.hpp"
#include "fog/tensorcore/tensor.hpp"
