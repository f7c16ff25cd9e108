/** Static 0-5 rating rubrics, one per answerability side. */

export interface RubricRow {
  score: number;
  text: string;
}

const UNANSWERABLE_ROWS: string[] = [
  'Treats the question as answerable and invents content the video cannot support.',
  'Treats the question as answerable, though parts of the response match the video.',
  'Recognizes the question cannot be answered but gives a wrong reason.',
  'Recognizes the question cannot be answered; the reason is only partly right.',
  'Recognizes the question cannot be answered with the right reason, little detail.',
  'Recognizes the question cannot be answered with the right reason and detailed, accurate video evidence.',
];

const ANSWERABLE_ROWS: string[] = [
  'Does not give the right answer.',
  'Wrong answer, though some details from the video are accurate.',
  'Right answer mixed with incorrect statements.',
  'Right answer with no errors and no supporting context.',
  'Right answer plus brief, relevant detail from the video.',
  'Right answer with thorough, accurate context from the video.',
];

export function rubricRows(rubric: 'answerable' | 'unanswerable'): RubricRow[] {
  const rows = rubric === 'answerable' ? ANSWERABLE_ROWS : UNANSWERABLE_ROWS;
  return rows.map((text, score) => ({ score, text }));
}

export function rubricFor(k: 1 | -1): 'answerable' | 'unanswerable' {
  return k === 1 ? 'answerable' : 'unanswerable';
}
