/** Intervention-panel rules: interventions apply at a round boundary that
 * has not passed yet, so past-round submissions are rejected client-side. */

import type { InterventionPayload } from "./types.js";

export interface InterventionForm {
  kind: "set_global" | "broadcast";
  apply_at_round: string;
  key?: string;
  value?: string;
  message?: string;
}

export type InterventionErrors = Partial<Record<keyof InterventionForm, string>>;

export function validateIntervention(
  form: InterventionForm,
  currentRound: number,
): InterventionErrors {
  const errors: InterventionErrors = {};
  if (!/^\d+$/.test(form.apply_at_round.trim())) {
    errors.apply_at_round = "apply_at_round must be a non-negative integer";
  } else if (parseInt(form.apply_at_round, 10) < currentRound) {
    errors.apply_at_round = `round ${form.apply_at_round} has already passed (current: ${currentRound})`;
  }
  if (form.kind === "set_global") {
    if (!form.key?.trim()) errors.key = "key is required";
    if (form.value === undefined || form.value === "") {
      errors.value = "value is required";
    }
  } else if (form.kind === "broadcast") {
    if (!form.message?.trim()) errors.message = "message is required";
  } else {
    errors.kind = "kind must be set_global or broadcast";
  }
  return errors;
}

export function formToIntervention(
  form: InterventionForm,
  currentRound: number,
): InterventionPayload {
  const errors = validateIntervention(form, currentRound);
  if (Object.keys(errors).length > 0) {
    throw new Error(`intervention has errors: ${Object.keys(errors).join(", ")}`);
  }
  const applyAt = parseInt(form.apply_at_round, 10);
  if (form.kind === "set_global") {
    return {
      apply_at_round: applyAt,
      kind: "set_global",
      key: form.key!,
      value: form.value!,
    };
  }
  return { apply_at_round: applyAt, kind: "broadcast", message: form.message! };
}
