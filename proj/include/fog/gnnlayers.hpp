#pragma once

#include "fog/gnnlayers/layers.hpp"
