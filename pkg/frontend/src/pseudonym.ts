/**
 * Pseudonym entry: classroom number plus the first letter of the teacher's
 * name (e.g. "12A"), so scores can be matched across sessions without
 * storing names.
 */

const PATTERN = /^\d{1,2}[A-Za-z]$/;

export function validatePseudonym(value: string): string | null {
  const trimmed = value.trim();
  if (PATTERN.test(trimmed)) return null;
  return "Use your classroom number and your teacher's first letter, like 12A.";
}

export function normalizePseudonym(value: string): string {
  return value.trim().toUpperCase();
}
