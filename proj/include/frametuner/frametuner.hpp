#pragma once

#include "frametuner/autotune.hpp"
#include "frametuner/descent.hpp"
#include "frametuner/eig.hpp"
#include "frametuner/frame.hpp"
#include "frametuner/io.hpp"
#include "frametuner/matrix.hpp"
#include "frametuner/partition.hpp"
#include "frametuner/rng.hpp"
#include "frametuner/structured.hpp"
