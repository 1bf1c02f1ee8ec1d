from rest_framework import serializers


class AuditReportSerializer(serializers.Serializer):
    id = serializers.CharField()
    corpus_size = serializers.IntegerField(min_value=0)
    empirical_constant = serializers.FloatField(allow_null=True)
    worst_case = serializers.CharField(allow_null=True)
    details = serializers.ListField(child=serializers.JSONField())

    def get_fields(self):
        fields = super().get_fields()
        details = fields.pop("details")
        # ``pass`` is a Python keyword.
        fields["pass"] = serializers.BooleanField(source="passed")
        fields["details"] = details
        return fields
