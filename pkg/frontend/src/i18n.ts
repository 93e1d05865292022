/** Static interface labels in English and Bengali. */

export type Language = 'en' | 'bn';

export interface Labels {
  title: string;
  tagline: string;
  uploadPrompt: string;
  analyze: string;
  uploading: string;
  diagnosis: string;
  confidence: string;
  probabilities: string;
  cureHeading: string;
  medicineHeading: string;
  retry: string;
  dismiss: string;
  notAnImage: string;
  toggleLabel: string;
}

export const LABELS: Record<Language, Labels> = {
  en: {
    title: 'Carrot Cure',
    tagline: 'Upload a carrot photo to get a diagnosis and cure guidance.',
    uploadPrompt: 'Choose a photo',
    analyze: 'Diagnose',
    uploading: 'Analyzing…',
    diagnosis: 'Diagnosis',
    confidence: 'Confidence',
    probabilities: 'Class probabilities',
    cureHeading: 'Cure',
    medicineHeading: 'Medicine',
    retry: 'Try again',
    dismiss: 'Dismiss',
    notAnImage: 'Please choose a PNG or JPEG image.',
    toggleLabel: 'বাংলা',
  },
  bn: {
    title: 'ক্যারট কিউর',
    tagline: 'রোগ নির্ণয় ও প্রতিকারের পরামর্শ পেতে গাজরের ছবি আপলোড করুন।',
    uploadPrompt: 'ছবি নির্বাচন করুন',
    analyze: 'রোগ নির্ণয় করুন',
    uploading: 'বিশ্লেষণ চলছে…',
    diagnosis: 'রোগ নির্ণয়',
    confidence: 'আস্থা',
    probabilities: 'শ্রেণিভিত্তিক সম্ভাবনা',
    cureHeading: 'প্রতিকার',
    medicineHeading: 'ওষুধ',
    retry: 'আবার চেষ্টা করুন',
    dismiss: 'বন্ধ করুন',
    notAnImage: 'অনুগ্রহ করে একটি PNG বা JPEG ছবি নির্বাচন করুন।',
    toggleLabel: 'English',
  },
};
