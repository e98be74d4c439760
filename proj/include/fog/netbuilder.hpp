#pragma once

#include "fog/netbuilder/checkpoint.hpp"
#include "fog/netbuilder/config.hpp"
#include "fog/netbuilder/model.hpp"
#include "fog/netbuilder/presets.hpp"
