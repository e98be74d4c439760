#pragma once

#include "fog/graphstore/dataset.hpp"
#include "fog/graphstore/generators.hpp"
#include "fog/graphstore/graph.hpp"
