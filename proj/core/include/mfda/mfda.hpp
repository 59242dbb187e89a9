#pragma once

#include "mfda/curves.hpp"
#include "mfda/error.hpp"
#include "mfda/fpca.hpp"
#include "mfda/grid.hpp"
#include "mfda/icc.hpp"
#include "mfda/ingest.hpp"
#include "mfda/leveltest.hpp"
#include "mfda/mfpca.hpp"
#include "mfda/random.hpp"
#include "mfda/simkl.hpp"
#include "mfda/statistics.hpp"
