#pragma once

#include "fog/fogctl/checks.hpp"
#include "fog/fogctl/commands.hpp"
#include "fog/fogctl/run_config.hpp"
