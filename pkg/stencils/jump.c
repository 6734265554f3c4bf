/* Unconditional transfer; the whole body is the elidable trailing jump. */
#include "holes.h"

CP_DECLARE_CONT(0)

CpRet CP_STENCIL(CP_ARGS)
{
    CP_TAIL CP_CONT(0)(CP_CONT_ARGS);
}
