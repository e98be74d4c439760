#pragma once

#include "fog/trainer/losses.hpp"
#include "fog/trainer/metrics.hpp"
#include "fog/trainer/optim.hpp"
#include "fog/trainer/train.hpp"
