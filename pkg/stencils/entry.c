/* Function prologue: check the frame pool limit, store register-passed
 * parameters into the first frame slots.
 * Parameters: N. Holes: ORD_FRAMESIZE, ORD_LIMIT. */
#include "holes.h"

CP_DECLARE_VALUE(ORD_FRAMESIZE)
CP_DECLARE_VALUE_WIDE(ORD_LIMIT)
CP_DECLARE_CONT(0)

CpRet CP_STENCIL(CP_ARGS)
{
    if (CP_UNWIND_IF(cp_f + CP_VAL(ORD_FRAMESIZE) > CP_VAL(ORD_LIMIT)))
        return (CpRet){0, CP_TRAP_FRAME};
#if N >= 1
    CP_FRAME_U64(0) = s1;
#endif
#if N >= 2
    CP_FRAME_U64(8) = s2;
#endif
#if N >= 3
    CP_FRAME_U64(16) = s3;
#endif
#if N >= 4
    CP_FRAME_U64(24) = s4;
#endif
    CP_TAIL CP_CONT(0)(CP_CONT_ARGS);
}
