#pragma once

#include "kronreg/errors.hpp"
#include "kronreg/experiment.hpp"
#include "kronreg/global_arnoldi.hpp"
#include "kronreg/matrix.hpp"
#include "kronreg/pgm.hpp"
#include "kronreg/problems.hpp"
#include "kronreg/regmat.hpp"
#include "kronreg/tikhonov.hpp"
